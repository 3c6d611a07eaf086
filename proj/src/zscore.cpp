#include "imrdmd/zscore.hpp"

#include "imrdmd/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace imrdmd {

std::vector<Index> select_baseline(const SensorMatrix& data, const BaselineSpec& spec) {
    std::vector<Index> out;
    if (!spec.explicit_ids.empty()) {
        for (const auto& id : spec.explicit_ids) {
            auto it = std::find(data.sensor_ids.begin(), data.sensor_ids.end(), id);
            if (it == data.sensor_ids.end()) throw Error("baseline sensor '" + id + "' not in data");
            out.push_back(static_cast<Index>(it - data.sensor_ids.begin()));
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
    if (!(spec.band_low < spec.band_high)) throw Error("baseline band needs band_low < band_high");
    const Index end = spec.window_end.value_or(data.steps());
    if (spec.window_start < 0 || end > data.steps() || spec.window_start >= end) {
        throw Error("baseline window is empty or out of range");
    }
    const Vector means = raw_magnitudes(data, spec.window_start, end);
    for (Index p = 0; p < means.size(); ++p) {
        if (means[p] >= spec.band_low && means[p] <= spec.band_high) out.push_back(p);
    }
    if (out.empty()) throw Error("no baseline sensors");
    return out;
}

Vector sensor_magnitudes(const MrDmdTree& tree, const ModeSelection& selection, Aggregation aggregation) {
    Vector m = Vector::Zero(tree.sensors());
    visit_nodes(tree, [&](const MrDmdNode& node, const std::string& path) {
        if (!node.dmd) return;
        for (auto it = selection.lower_bound(ModeKey{path, 0});
             it != selection.end() && it->node_path == path; ++it) {
            if (it->mode >= node.dmd->rank()) continue;
            const CVector phi = scaled_mode(*node.dmd, it->mode);
            if (aggregation == Aggregation::abs_sum) {
                m += phi.cwiseAbs();
            } else {
                m += phi.cwiseAbs2();
            }
        }
    });
    return m;
}

Vector raw_magnitudes(const SensorMatrix& data, Index t_start, Index t_end) {
    if (t_start < 0 || t_end > data.steps() || t_start >= t_end) throw Error("raw_magnitudes: bad window");
    return data.values.middleCols(t_start, t_end - t_start).rowwise().mean();
}

ZClass classify(double z) {
    if (z < -1.5) return ZClass::low;
    if (z <= 1.5) return ZClass::baseline;
    if (z <= 2.0) return ZClass::elevated;
    return ZClass::high;
}

const char* to_string(ZClass c) {
    switch (c) {
    case ZClass::low: return "low";
    case ZClass::baseline: return "baseline";
    case ZClass::elevated: return "elevated";
    case ZClass::high: return "high";
    }
    return "baseline";
}

ZClass parse_zclass(const std::string& s) {
    if (s == "low") return ZClass::low;
    if (s == "baseline") return ZClass::baseline;
    if (s == "elevated") return ZClass::elevated;
    if (s == "high") return ZClass::high;
    throw Error("unknown z-score class '" + s + "'");
}

ZScoreReport zscores(const Vector& magnitudes, std::span<const Index> baseline) {
    if (baseline.size() < 2) throw Error("zscores: baseline needs at least 2 sensors");
    ZScoreReport out;
    out.magnitudes = magnitudes;
    out.baseline.assign(baseline.begin(), baseline.end());
    out.members = static_cast<Index>(baseline.size());
    double sum = 0;
    for (Index p : baseline) {
        if (p < 0 || p >= magnitudes.size()) throw Error("zscores: baseline index out of range");
        sum += magnitudes[p];
    }
    out.mean = sum / static_cast<double>(baseline.size());
    double ss = 0;
    for (Index p : baseline) ss += (magnitudes[p] - out.mean) * (magnitudes[p] - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(baseline.size()));
    if (!(out.stddev > 0) || out.stddev <= 1e-14 * std::abs(out.mean)) {
        throw Error("degenerate baseline: zero standard deviation");
    }
    out.z = (magnitudes.array() - out.mean) / out.stddev;
    out.classes.reserve(static_cast<std::size_t>(out.z.size()));
    for (Index p = 0; p < out.z.size(); ++p) out.classes.push_back(classify(out.z[p]));
    return out;
}

std::vector<ZScoreRow> zscore_rows(const ZScoreReport& report, const std::vector<std::string>& sensor_ids,
                                   const SensorMap& sensor_map) {
    if (static_cast<Index>(sensor_ids.size()) != report.z.size()) {
        throw Error("zscore_rows: sensor id count does not match report");
    }
    std::vector<ZScoreRow> rows;
    rows.reserve(sensor_ids.size());
    for (std::size_t i = 0; i < sensor_ids.size(); ++i) {
        ZScoreRow row;
        row.sensor_id = sensor_ids[i];
        if (auto it = sensor_map.find(sensor_ids[i]); it != sensor_map.end()) {
            row.node_id = it->second.node;
            row.category = it->second.category;
        }
        const auto k = static_cast<Index>(i);
        row.magnitude = report.magnitudes[k];
        row.z = report.z[k];
        row.cls = report.classes[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_zscore_csv(const std::vector<ZScoreRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    char buf[64];
    auto num = [&](double v) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, ptr);
    };
    out << "sensor_id,node_id,category,magnitude,z,class\n";
    for (const auto& r : rows) {
        out << r.sensor_id << ',' << r.node_id << ',' << r.category << ',' << num(r.magnitude) << ','
            << num(r.z) << ',' << to_string(r.cls) << '\n';
    }
    if (!out) throw Error("write failed for " + path.string());
}

std::vector<ZScoreRow> read_zscore_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<ZScoreRow> rows;
    Index line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() != 6) {
            throw Error(path.string() + " line " + std::to_string(line_no) + ": expected 6 fields");
        }
        ZScoreRow r;
        r.sensor_id = cells[0];
        r.node_id = cells[1];
        r.category = cells[2];
        r.magnitude = std::stod(cells[3]);
        r.z = std::stod(cells[4]);
        r.cls = parse_zclass(cells[5]);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace imrdmd
