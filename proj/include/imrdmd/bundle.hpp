#pragma once

#include "imrdmd/layout.hpp"
#include "imrdmd/mrdmd.hpp"
#include "imrdmd/spectrum.hpp"
#include "imrdmd/timeseries.hpp"
#include "imrdmd/zscore.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace imrdmd {

inline constexpr int kBundleVersion = 1;

/// One analysis window of z-score rows.
struct ZScoreWindow {
    std::string name;
    Index t_start = 0;
    Index t_end = 0;
    std::vector<ZScoreRow> rows;
};

/// Hardware-error node ids and job -> node-id allocations.
struct Annotations {
    std::vector<std::string> hardware_errors;
    std::map<std::string, std::vector<std::string>> jobs;
};

/// Reads `{"hardware_errors": [...], "jobs": {"<job>": [...]}}`; both keys optional.
Annotations load_annotations(const std::filesystem::path& path);
void merge_annotations(Annotations& into, const Annotations& more);

struct BundleInputs {
    const MrDmdTree* tree = nullptr;
    LayoutSpec layout;
    std::vector<ZScoreWindow> windows;
    Annotations annotations;
    /// Raw readings over the tree timeline; enables raw series in the bundle.
    const SensorMatrix* data = nullptr;
    /// sensor -> (node, category). Falls back to the z-score rows, then to the
    /// sensor id itself as node id with category "default".
    SensorMap sensor_map;
    /// Keep every n-th time step in series.json.
    Index series_stride = 1;
    bool include_reconstruction = true;
};

/// In-memory bundle, one JSON document per file.
struct UiBundle {
    nlohmann::json meta;
    nlohmann::json layout;
    nlohmann::json zscores;
    nlohmann::json series;
    nlohmann::json annotations;
    nlohmann::json spectrum;
};

/// Builds the bundle; throws if any referenced node id is not in the layout.
UiBundle build_bundle(const BundleInputs& inputs);

/// Writes meta.json, layout.json, zscores.json, series.json, annotations.json
/// and spectrum.json into `dir`.
void write_bundle(const UiBundle& bundle, const std::filesystem::path& dir);
UiBundle read_bundle(const std::filesystem::path& dir);

inline const std::vector<std::string>& bundle_file_names() {
    static const std::vector<std::string> names{"meta", "layout", "zscores",
                                                "series", "annotations", "spectrum"};
    return names;
}

/// Structural and referential checks matching docs/bundle.schema.json.
/// Returns one message per problem; empty means valid.
std::vector<std::string> validate_bundle(const UiBundle& bundle);

/// Window sidecar written next to a z-score CSV: `<csv>.window.json`.
void write_window_sidecar(const std::filesystem::path& csv, Index t_start, Index t_end);
/// Reads a z-score CSV and its sidecar; without a sidecar the window is [0, total).
ZScoreWindow load_zscore_window(const std::filesystem::path& csv, Index total_timesteps);

} // namespace imrdmd
