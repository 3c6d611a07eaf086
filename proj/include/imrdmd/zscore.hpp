#pragma once

#include "imrdmd/mrdmd.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace imrdmd {

/// Baseline sensors: those whose mean reading over the window lies in
/// [band_low, band_high], unless explicit ids are given.
struct BaselineSpec {
    double band_low = 0.0;
    double band_high = 0.0;
    std::vector<std::string> explicit_ids;
    Index window_start = 0;
    std::optional<Index> window_end; ///< defaults to T
};

std::vector<Index> select_baseline(const SensorMatrix& data, const BaselineSpec& spec);

enum class Aggregation { abs_sum, sum_squares };

/// Per-sensor magnitude of the selected amplitude-scaled modes (sum of |a phi| by default).
Vector sensor_magnitudes(const MrDmdTree& tree, const ModeSelection& selection,
                         Aggregation aggregation = Aggregation::abs_sum);

/// Mean raw reading per sensor over [t_start, t_end), the alternative to mode magnitudes.
Vector raw_magnitudes(const SensorMatrix& data, Index t_start, Index t_end);

enum class ZClass { low, baseline, elevated, high };

/// low: z < -1.5, baseline: [-1.5, 1.5], elevated: (1.5, 2], high: z > 2.
ZClass classify(double z);
const char* to_string(ZClass c);

struct ZScoreReport {
    Vector magnitudes;
    Vector z;
    std::vector<ZClass> classes;
    double mean = 0.0;
    double stddev = 0.0; ///< population standard deviation over the baseline
    Index members = 0;
    std::vector<Index> baseline;
    ModeSelection selection;
};

/// Scores every sensor against the baseline distribution of magnitudes.
ZScoreReport zscores(const Vector& magnitudes, std::span<const Index> baseline);

struct ZScoreRow {
    std::string sensor_id;
    std::string node_id;
    std::string category;
    double magnitude = 0.0;
    double z = 0.0;
    ZClass cls = ZClass::baseline;
};

std::vector<ZScoreRow> zscore_rows(const ZScoreReport& report, const std::vector<std::string>& sensor_ids,
                                   const SensorMap& sensor_map);

/// CSV with columns sensor_id,node_id,category,magnitude,z,class.
void write_zscore_csv(const std::vector<ZScoreRow>& rows, const std::filesystem::path& path);
std::vector<ZScoreRow> read_zscore_csv(const std::filesystem::path& path);

ZClass parse_zclass(const std::string& s);

} // namespace imrdmd
