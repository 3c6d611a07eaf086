#pragma once

#include "imrdmd/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace imrdmd {

/// P sensors by T uniformly sampled readings.
///
/// Immutable once built through make_sensor_matrix(); the invariants
/// (unique ids, strictly increasing timestamps on a uniform grid, finite
/// values) are checked there.
struct SensorMatrix {
    std::vector<std::string> sensor_ids;
    std::vector<double> timestamps;
    Matrix values;
    double delta_t = 1.0;

    Index sensors() const { return values.rows(); }
    Index steps() const { return values.cols(); }
};

/// X holds columns 0..T-2 and Y columns 1..T-1.
struct SnapshotPair {
    Matrix x;
    Matrix y;
};

struct SensorInfo {
    std::string node;
    std::string category;
};

using SensorMap = std::map<std::string, SensorInfo>;

struct IngestOptions {
    /// Rows required in the file. The partial-fit path accepts short chunks.
    Index min_rows = 2;
    /// Sampling interval to use when it cannot be inferred (fewer than two rows)
    /// or to check against when it can.
    std::optional<double> delta_t;
    /// Accepted deviation of a timestamp step from delta_t, as a fraction.
    double jitter = 0.10;
};

SensorMatrix make_sensor_matrix(std::vector<std::string> ids, std::vector<double> timestamps,
                                Matrix values, double delta_t, double jitter = 0.10);

/// Reads `timestamp,<sensor>,<sensor>,...` CSV. Empty, `nan` and `NA` cells
/// are treated as missing and repaired by per-sensor linear interpolation.
SensorMatrix ingest_csv(const std::filesystem::path& path, const IngestOptions& options = {});

/// Writes the matrix back in the ingest format with round-trip precision.
void write_csv(const SensorMatrix& m, const std::filesystem::path& path);

/// Loads `{sensor_id: {"node": ..., "category": ...}}`.
SensorMap load_sensor_map(const std::filesystem::path& path);

SnapshotPair shift_pair(const Matrix& snapshots);
SnapshotPair shift_pair(const SensorMatrix& m);

SensorMatrix window(const SensorMatrix& m, Index t_start, Index t_end);

std::vector<SensorMatrix> replay_chunks(const SensorMatrix& m, Index chunk);

/// Appends b's columns to a. Sensor ids and delta_t must match.
SensorMatrix concat(const SensorMatrix& a, const SensorMatrix& b);

/// One additive component of a synthetic signal.
struct SyntheticComponent {
    Vector pattern;          ///< spatial weight per sensor (length P)
    /// Optional second pattern in quadrature: the component becomes
    /// Re((pattern + i quadrature) e^{i(2 pi f t + phase)}), a travelling wave
    /// of spatial rank 2. Left empty it is a standing wave.
    Vector quadrature;
    double frequency_hz = 0; ///< oscillation frequency
    double growth = 0;       ///< exponential growth rate, 1/second
    double amplitude = 1;
    double phase = 0;
};

struct SyntheticData {
    SensorMatrix matrix;
    Matrix clean; ///< noise-free values
    std::vector<Complex> exponents; ///< ground-truth continuous exponents, conjugates included
};

SyntheticData generate_synthetic(Index p, Index t, const std::vector<SyntheticComponent>& components,
                                 double noise_sigma, double delta_t, std::uint64_t seed,
                                 double t0 = 0.0);

} // namespace imrdmd
