#pragma once

#include "imrdmd/mrdmd.hpp"
#include "imrdmd/spectrum.hpp"
#include "imrdmd/zscore.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace imrdmd {

inline constexpr const char* kDefaultLayout = "xc40 1 2 row0-1:0-10 2 c:0-7 1 s:0-7 1 b:0 n:0";

/// Everything a run can be configured with; loaded from the --config JSON.
///
/// {
///   "max_levels": 4, "max_cycles": 2, "rank": "svht" | "full" | <int>,
///   "operator": "forward_backward" | "exact",
///   "split_ratio": 0.5, "min_window": 4, "cache_all_levels": false, "cache_max_rank": null,
///   "drift_threshold": null,
///   "frequency_band": [0, null],
///   "power_floor": {"absolute": 0} | {"quantile": 0.9},
///   "baseline": {"band": [lo, hi], "ids": [...], "window": [start, end]},
///   "aggregation": "abs_sum" | "sum_squares",
///   "layout": "xc40 1 2 ...", "sensor_map": "sensors.json", "output_dir": "."
/// }
///
/// A null bound is unbounded. Without a baseline band or ids every sensor is
/// in the baseline.
struct RunConfig {
    MrDmdConfig mrdmd;
    std::optional<double> drift_threshold;
    double band_low_hz = 0.0;
    double band_high_hz = std::numeric_limits<double>::infinity();
    PowerFloor power_floor;
    BaselineSpec baseline{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                          {}, 0, std::nullopt};
    Aggregation aggregation = Aggregation::abs_sum;
    std::string layout = kDefaultLayout;
    std::string sensor_map;
    std::string output_dir = ".";
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitEmptySelection = 3;

/// Runs one subcommand; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace imrdmd
