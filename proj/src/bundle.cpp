#include "imrdmd/bundle.hpp"
#include "imrdmd/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace imrdmd {
namespace {

using nlohmann::json;

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump() << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

std::vector<std::string> string_list(const json& j, const std::string& what) {
    if (!j.is_array()) throw Error(what + " must be a list of node ids");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) throw Error(what + " must hold strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

json layout_json(const LayoutSpec& spec) {
    json j;
    j["layout_string"] = render_layout_string(spec);
    j["system_name"] = spec.system_name;
    j["alignments"] = {{"row", spec.row_alignment},
                       {"column", spec.column_alignment},
                       {"cabinet", spec.cabinet_alignment},
                       {"slot", spec.slot_alignment},
                       {"blade", spec.blade_alignment}};
    auto range = [](const TierRange& r) { return json::array({r.lo, r.hi}); };
    j["tiers"] = {{"rows", range(spec.rows)},         {"racks", range(spec.racks)},
                  {"cabinets", range(spec.cabinets)}, {"slots", range(spec.slots)},
                  {"blades", range(spec.blades)},     {"nodes", range(spec.nodes)}};
    const GridSize g = grid_size(spec);
    j["grid"] = {{"width", g.width}, {"height", g.height}};
    json nodes = json::array();
    for (const auto& n : enumerate_nodes(spec)) {
        nodes.push_back({{"id", n.id},
                         {"x", n.x},
                         {"y", n.y},
                         {"row", n.address.row},
                         {"rack", n.address.rack},
                         {"cabinet", n.address.cabinet},
                         {"slot", n.address.slot},
                         {"blade", n.address.blade},
                         {"node", n.address.node}});
    }
    j["nodes"] = std::move(nodes);
    return j;
}

struct Mean {
    double sum = 0;
    Index n = 0;
    void add(double v) {
        sum += v;
        ++n;
    }
    double value() const { return n ? sum / static_cast<double>(n) : 0.0; }
};

} // namespace

Annotations load_annotations(const std::filesystem::path& path) {
    const json j = read_json(path);
    if (!j.is_object()) throw Error(path.string() + ": annotations must be a JSON object");
    Annotations a;
    if (j.contains("hardware_errors")) {
        a.hardware_errors = string_list(j["hardware_errors"], "hardware_errors");
    }
    if (j.contains("jobs")) {
        if (!j["jobs"].is_object()) throw Error(path.string() + ": jobs must map job names to id lists");
        for (auto it = j["jobs"].begin(); it != j["jobs"].end(); ++it) {
            a.jobs[it.key()] = string_list(it.value(), "job '" + it.key() + "'");
        }
    }
    return a;
}

void merge_annotations(Annotations& into, const Annotations& more) {
    for (const auto& id : more.hardware_errors) {
        if (std::find(into.hardware_errors.begin(), into.hardware_errors.end(), id) ==
            into.hardware_errors.end()) {
            into.hardware_errors.push_back(id);
        }
    }
    for (const auto& [job, ids] : more.jobs) {
        auto& dst = into.jobs[job];
        for (const auto& id : ids) {
            if (std::find(dst.begin(), dst.end(), id) == dst.end()) dst.push_back(id);
        }
    }
}

UiBundle build_bundle(const BundleInputs& in) {
    if (!in.tree) throw Error("build_bundle: no tree");
    const MrDmdTree& tree = *in.tree;
    if (in.series_stride < 1) throw Error("series stride must be at least 1");

    std::set<std::string> known;
    for (const auto& n : enumerate_nodes(in.layout)) known.insert(n.id);
    auto require = [&](const std::string& id, const std::string& where) {
        if (!known.count(id)) throw Error("unknown node id '" + id + "' in " + where);
    };

    UiBundle b;
    b.layout = layout_json(in.layout);

    std::set<std::string> categories;

    // z-scores, aggregated per node and category
    json windows = json::array();
    json window_meta = json::array();
    for (const auto& w : in.windows) {
        if (w.t_start < 0 || w.t_end > tree.total_timesteps || w.t_start >= w.t_end) {
            throw Error("window '" + w.name + "' [" + std::to_string(w.t_start) + "," +
                        std::to_string(w.t_end) + ") outside the fitted timeline [0," +
                        std::to_string(tree.total_timesteps) + ")");
        }
        std::map<std::string, std::map<std::string, std::pair<Mean, Mean>>> agg;
        for (const auto& row : w.rows) {
            require(row.node_id, "z-scores '" + w.name + "'");
            auto& cell = agg[row.category][row.node_id];
            cell.first.add(row.z);
            cell.second.add(row.magnitude);
            categories.insert(row.category);
        }
        json cats = json::object();
        for (const auto& [cat, nodes] : agg) {
            json per_node = json::object();
            for (const auto& [node, cell] : nodes) {
                const double z = cell.first.value();
                per_node[node] = {{"z", z}, {"class", to_string(classify(z))}, {"value", cell.second.value()}};
            }
            cats[cat] = std::move(per_node);
        }
        windows.push_back({{"name", w.name}, {"t_start", w.t_start}, {"t_end", w.t_end}, {"categories", cats}});
        window_meta.push_back({{"name", w.name}, {"t_start", w.t_start}, {"t_end", w.t_end}});
    }
    b.zscores = {{"windows", windows}};

    // sensor -> (node, category)
    std::map<std::string, SensorInfo> placement;
    for (const auto& w : in.windows) {
        for (const auto& row : w.rows) placement.try_emplace(row.sensor_id, SensorInfo{row.node_id, row.category});
    }
    for (const auto& [sensor, info] : in.sensor_map) placement[sensor] = info;

    // series
    const Index total = tree.total_timesteps;
    json timestamps = json::array();
    std::vector<Index> steps;
    for (Index k = 0; k < total; k += in.series_stride) {
        steps.push_back(k);
        timestamps.push_back(tree.t0 + static_cast<double>(k) * tree.delta_t);
    }
    json series_nodes = json::object();
    if (in.data && (in.data->steps() != total || in.data->sensors() != tree.sensors())) {
        throw Error("bundle data does not match the fitted timeline");
    }
    Matrix recon;
    if (in.include_reconstruction && total > 0) recon = mrdmd_reconstruct(tree, 0, total);
    if (in.data || recon.size() > 0) {
        struct Acc {
            std::vector<double> raw, rec;
            Index n = 0;
        };
        std::map<std::pair<std::string, std::string>, Acc> acc;
        for (Index s = 0; s < tree.sensors(); ++s) {
            const std::string& sid = tree.sensor_ids[static_cast<std::size_t>(s)];
            auto it = placement.find(sid);
            const SensorInfo info = it != placement.end() ? it->second : SensorInfo{sid, "default"};
            require(info.node, "series (sensor '" + sid + "')");
            categories.insert(info.category);
            Acc& a = acc[{info.node, info.category}];
            if (a.n == 0) {
                if (in.data) a.raw.assign(steps.size(), 0.0);
                if (recon.size()) a.rec.assign(steps.size(), 0.0);
            }
            ++a.n;
            for (std::size_t j = 0; j < steps.size(); ++j) {
                if (in.data) a.raw[j] += in.data->values(s, steps[j]);
                if (recon.size()) a.rec[j] += recon(s, steps[j]);
            }
        }
        for (auto& [key, a] : acc) {
            const double inv = 1.0 / static_cast<double>(a.n);
            json entry = json::object();
            if (!a.raw.empty()) {
                for (auto& v : a.raw) v *= inv;
                entry["raw"] = a.raw;
            }
            if (!a.rec.empty()) {
                for (auto& v : a.rec) v *= inv;
                entry["recon"] = a.rec;
            }
            series_nodes[key.first][key.second] = std::move(entry);
        }
    }
    b.series = {{"stride", in.series_stride}, {"timestamps", timestamps}, {"nodes", series_nodes}};

    // annotations
    for (const auto& id : in.annotations.hardware_errors) require(id, "annotations hardware_errors");
    json jobs = json::object();
    for (const auto& [job, ids] : in.annotations.jobs) {
        for (const auto& id : ids) require(id, "annotations job '" + job + "'");
        jobs[job] = ids;
    }
    b.annotations = {{"hardware_errors", in.annotations.hardware_errors}, {"jobs", jobs}};

    // spectrum
    json points = json::array();
    for (const auto& p : spectrum_of(tree)) {
        points.push_back({{"level", p.level},
                          {"node_path", p.node_path},
                          {"mode_index", p.mode_index},
                          {"frequency_hz", p.frequency_hz},
                          {"power", p.power},
                          {"growth", std::isfinite(p.growth) ? json(p.growth) : json(nullptr)}});
    }
    b.spectrum = {{"points", points}};

    b.meta = {{"format", "imrdmd-ui-bundle"},
              {"version", kBundleVersion},
              {"system_name", in.layout.system_name},
              {"total_timesteps", total},
              {"delta_t", tree.delta_t},
              {"t0", tree.t0},
              {"sensor_count", tree.sensors()},
              {"node_count", in.layout.node_count()},
              {"config", config_to_json(tree.config)},
              {"categories", std::vector<std::string>(categories.begin(), categories.end())},
              {"windows", window_meta}};
    return b;
}

void write_bundle(const UiBundle& b, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_json(b.meta, dir / "meta.json");
    write_json(b.layout, dir / "layout.json");
    write_json(b.zscores, dir / "zscores.json");
    write_json(b.series, dir / "series.json");
    write_json(b.annotations, dir / "annotations.json");
    write_json(b.spectrum, dir / "spectrum.json");
}

UiBundle read_bundle(const std::filesystem::path& dir) {
    UiBundle b;
    b.meta = read_json(dir / "meta.json");
    b.layout = read_json(dir / "layout.json");
    b.zscores = read_json(dir / "zscores.json");
    b.series = read_json(dir / "series.json");
    b.annotations = read_json(dir / "annotations.json");
    b.spectrum = read_json(dir / "spectrum.json");
    return b;
}

namespace {

class Checker {
public:
    std::vector<std::string> problems;

    void fail(const std::string& where, const std::string& what) { problems.push_back(where + ": " + what); }

    bool object(const json& j, const std::string& where, std::initializer_list<const char*> required) {
        if (!j.is_object()) {
            fail(where, "expected object");
            return false;
        }
        bool ok = true;
        for (const char* key : required) {
            if (!j.contains(key)) {
                fail(where, std::string("missing '") + key + "'");
                ok = false;
            }
        }
        return ok;
    }
    bool array(const json& j, const std::string& where) {
        if (!j.is_array()) fail(where, "expected array");
        return j.is_array();
    }
    bool integer(const json& j, const std::string& where, std::optional<std::int64_t> min = std::nullopt) {
        if (!j.is_number_integer()) {
            fail(where, "expected integer");
            return false;
        }
        if (min && j.get<std::int64_t>() < *min) {
            fail(where, "below minimum " + std::to_string(*min));
            return false;
        }
        return true;
    }
    bool number(const json& j, const std::string& where) {
        if (!j.is_number()) fail(where, "expected number");
        return j.is_number();
    }
    bool string(const json& j, const std::string& where) {
        if (!j.is_string()) fail(where, "expected string");
        return j.is_string();
    }
    void number_list(const json& j, const std::string& where) {
        if (!array(j, where)) return;
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number()) {
                fail(where + "[" + std::to_string(i) + "]", "expected number");
                return;
            }
        }
    }
};

} // namespace

std::vector<std::string> validate_bundle(const UiBundle& b) {
    Checker c;
    std::set<std::string> ids;
    std::int64_t total = -1;

    // meta
    if (c.object(b.meta, "meta", {"format", "version", "system_name", "total_timesteps", "delta_t", "t0",
                                  "sensor_count", "node_count", "config", "categories", "windows"})) {
        const auto& m = b.meta;
        if (m["format"] != "imrdmd-ui-bundle") c.fail("meta.format", "expected \"imrdmd-ui-bundle\"");
        if (c.integer(m["version"], "meta.version") && m["version"] != kBundleVersion) {
            c.fail("meta.version", "unsupported version");
        }
        c.string(m["system_name"], "meta.system_name");
        if (c.integer(m["total_timesteps"], "meta.total_timesteps", 0)) total = m["total_timesteps"].get<std::int64_t>();
        if (c.number(m["delta_t"], "meta.delta_t") && !(m["delta_t"].get<double>() > 0)) {
            c.fail("meta.delta_t", "must be positive");
        }
        c.number(m["t0"], "meta.t0");
        c.integer(m["sensor_count"], "meta.sensor_count", 0);
        c.integer(m["node_count"], "meta.node_count", 0);
        c.object(m["config"], "meta.config", {});
        if (c.array(m["categories"], "meta.categories")) {
            for (const auto& v : m["categories"]) c.string(v, "meta.categories[]");
        }
        if (c.array(m["windows"], "meta.windows")) {
            for (const auto& w : m["windows"]) {
                if (c.object(w, "meta.windows[]", {"name", "t_start", "t_end"})) {
                    c.string(w["name"], "meta.windows[].name");
                    c.integer(w["t_start"], "meta.windows[].t_start", 0);
                    c.integer(w["t_end"], "meta.windows[].t_end", 0);
                }
            }
        }
    }

    // layout
    if (c.object(b.layout, "layout", {"layout_string", "system_name", "alignments", "tiers", "grid", "nodes"})) {
        const auto& l = b.layout;
        c.string(l["layout_string"], "layout.layout_string");
        c.string(l["system_name"], "layout.system_name");
        if (c.object(l["alignments"], "layout.alignments", {"row", "column", "cabinet", "slot", "blade"})) {
            for (const char* key : {"row", "column", "cabinet", "slot", "blade"}) {
                const auto& v = l["alignments"][key];
                const std::string where = std::string("layout.alignments.") + key;
                if (c.integer(v, where)) {
                    const auto code = v.get<int>();
                    if (code != -1 && code != 1 && code != 2) c.fail(where, "alignment must be -1, 1 or 2");
                }
            }
        }
        if (c.object(l["tiers"], "layout.tiers", {"rows", "racks", "cabinets", "slots", "blades", "nodes"})) {
            for (const char* key : {"rows", "racks", "cabinets", "slots", "blades", "nodes"}) {
                const auto& v = l["tiers"][key];
                const std::string where = std::string("layout.tiers.") + key;
                if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
                    c.fail(where, "expected [lo, hi] integers");
                } else if (v[0].get<int>() > v[1].get<int>() || v[0].get<int>() < 0) {
                    c.fail(where, "reversed or negative range");
                }
            }
        }
        std::int64_t width = -1;
        std::int64_t height = -1;
        if (c.object(l["grid"], "layout.grid", {"width", "height"}) &&
            c.integer(l["grid"]["width"], "layout.grid.width", 0) &&
            c.integer(l["grid"]["height"], "layout.grid.height", 0)) {
            width = l["grid"]["width"].get<std::int64_t>();
            height = l["grid"]["height"].get<std::int64_t>();
        }
        std::set<std::pair<std::int64_t, std::int64_t>> cells;
        if (c.array(l["nodes"], "layout.nodes")) {
            for (const auto& n : l["nodes"]) {
                if (!c.object(n, "layout.nodes[]",
                              {"id", "x", "y", "row", "rack", "cabinet", "slot", "blade", "node"})) {
                    continue;
                }
                if (!c.string(n["id"], "layout.nodes[].id")) continue;
                const auto id = n["id"].get<std::string>();
                if (!ids.insert(id).second) c.fail("layout.nodes", "duplicate id '" + id + "'");
                for (const char* key : {"row", "rack", "cabinet", "slot", "blade", "node"}) {
                    c.integer(n[key], "layout.nodes['" + id + "']." + key, 0);
                }
                if (c.integer(n["x"], "layout.nodes['" + id + "'].x", 0) &&
                    c.integer(n["y"], "layout.nodes['" + id + "'].y", 0)) {
                    const auto x = n["x"].get<std::int64_t>();
                    const auto y = n["y"].get<std::int64_t>();
                    if (width >= 0 && (x >= width || y >= height)) {
                        c.fail("layout.nodes['" + id + "']", "cell outside the grid");
                    }
                    if (!cells.insert({x, y}).second) c.fail("layout.nodes['" + id + "']", "overlapping cell");
                }
            }
        }
        if (b.meta.is_object() && b.meta.contains("node_count") && b.meta["node_count"].is_number_integer() &&
            l["nodes"].is_array() && b.meta["node_count"].get<std::size_t>() != l["nodes"].size()) {
            c.fail("meta.node_count", "does not match layout.nodes");
        }
    }
    auto known = [&](const json& id, const std::string& where) {
        if (!id.is_string()) {
            c.fail(where, "expected node id string");
        } else if (!ids.count(id.get<std::string>())) {
            c.fail(where, "unknown node id '" + id.get<std::string>() + "'");
        }
    };
    auto window_range = [&](const json& w, const std::string& where) {
        if (!w["t_start"].is_number_integer() || !w["t_end"].is_number_integer()) return;
        const auto a = w["t_start"].get<std::int64_t>();
        const auto e = w["t_end"].get<std::int64_t>();
        if (a >= e || (total >= 0 && e > total)) c.fail(where, "window not covered by the fitted timeline");
    };
    if (b.meta.is_object() && b.meta.contains("windows") && b.meta["windows"].is_array()) {
        for (const auto& w : b.meta["windows"]) {
            if (w.is_object() && w.contains("t_start") && w.contains("t_end")) window_range(w, "meta.windows[]");
        }
    }

    // zscores
    if (c.object(b.zscores, "zscores", {"windows"}) && c.array(b.zscores["windows"], "zscores.windows")) {
        for (const auto& w : b.zscores["windows"]) {
            if (!c.object(w, "zscores.windows[]", {"name", "t_start", "t_end", "categories"})) continue;
            const std::string where = "zscores.windows['" + (w["name"].is_string() ? w["name"].get<std::string>() : "?") + "']";
            c.string(w["name"], where + ".name");
            c.integer(w["t_start"], where + ".t_start", 0);
            c.integer(w["t_end"], where + ".t_end", 0);
            window_range(w, where);
            if (!c.object(w["categories"], where + ".categories", {})) continue;
            for (auto cat = w["categories"].begin(); cat != w["categories"].end(); ++cat) {
                if (!c.object(cat.value(), where + "." + cat.key(), {})) continue;
                for (auto node = cat.value().begin(); node != cat.value().end(); ++node) {
                    const std::string nw = where + "." + cat.key() + "['" + node.key() + "']";
                    known(node.key(), nw);
                    if (!c.object(node.value(), nw, {"z", "class", "value"})) continue;
                    c.number(node.value()["z"], nw + ".z");
                    c.number(node.value()["value"], nw + ".value");
                    const auto& cls = node.value()["class"];
                    if (!cls.is_string() || (cls != "low" && cls != "baseline" && cls != "elevated" && cls != "high")) {
                        c.fail(nw + ".class", "expected low, baseline, elevated or high");
                    }
                }
            }
        }
    }

    // series
    if (c.object(b.series, "series", {"stride", "timestamps", "nodes"})) {
        c.integer(b.series["stride"], "series.stride", 1);
        c.number_list(b.series["timestamps"], "series.timestamps");
        const std::size_t len = b.series["timestamps"].is_array() ? b.series["timestamps"].size() : 0;
        if (c.object(b.series["nodes"], "series.nodes", {})) {
            for (auto node = b.series["nodes"].begin(); node != b.series["nodes"].end(); ++node) {
                const std::string where = "series.nodes['" + node.key() + "']";
                known(node.key(), where);
                if (!c.object(node.value(), where, {})) continue;
                for (auto cat = node.value().begin(); cat != node.value().end(); ++cat) {
                    const std::string cw = where + "." + cat.key();
                    if (!c.object(cat.value(), cw, {})) continue;
                    for (const char* key : {"raw", "recon"}) {
                        if (!cat.value().contains(key)) continue;
                        const auto& v = cat.value()[key];
                        c.number_list(v, cw + "." + key);
                        if (v.is_array() && v.size() != len) c.fail(cw + "." + key, "length differs from timestamps");
                    }
                }
            }
        }
    }

    // annotations
    if (c.object(b.annotations, "annotations", {"hardware_errors", "jobs"})) {
        if (c.array(b.annotations["hardware_errors"], "annotations.hardware_errors")) {
            for (const auto& id : b.annotations["hardware_errors"]) known(id, "annotations.hardware_errors");
        }
        if (c.object(b.annotations["jobs"], "annotations.jobs", {})) {
            for (auto job = b.annotations["jobs"].begin(); job != b.annotations["jobs"].end(); ++job) {
                const std::string where = "annotations.jobs['" + job.key() + "']";
                if (!c.array(job.value(), where)) continue;
                for (const auto& id : job.value()) known(id, where);
            }
        }
    }

    // spectrum
    if (c.object(b.spectrum, "spectrum", {"points"}) && c.array(b.spectrum["points"], "spectrum.points")) {
        for (const auto& p : b.spectrum["points"]) {
            if (!c.object(p, "spectrum.points[]",
                          {"level", "node_path", "mode_index", "frequency_hz", "power", "growth"})) {
                continue;
            }
            c.integer(p["level"], "spectrum.points[].level", 1);
            c.string(p["node_path"], "spectrum.points[].node_path");
            c.integer(p["mode_index"], "spectrum.points[].mode_index", 0);
            if (c.number(p["frequency_hz"], "spectrum.points[].frequency_hz") && p["frequency_hz"].get<double>() < 0) {
                c.fail("spectrum.points[].frequency_hz", "negative");
            }
            if (c.number(p["power"], "spectrum.points[].power") && p["power"].get<double>() < 0) {
                c.fail("spectrum.points[].power", "negative");
            }
            if (!p["growth"].is_null()) c.number(p["growth"], "spectrum.points[].growth");
        }
    }
    return c.problems;
}

void write_window_sidecar(const std::filesystem::path& csv, Index t_start, Index t_end) {
    write_json({{"t_start", t_start}, {"t_end", t_end}}, csv.string() + ".window.json");
}

ZScoreWindow load_zscore_window(const std::filesystem::path& csv, Index total_timesteps) {
    ZScoreWindow w;
    w.name = csv.stem().string();
    w.t_start = 0;
    w.t_end = total_timesteps;
    const std::filesystem::path sidecar = csv.string() + ".window.json";
    if (std::filesystem::exists(sidecar)) {
        const json j = read_json(sidecar);
        try {
            w.t_start = j.at("t_start").get<Index>();
            w.t_end = j.at("t_end").get<Index>();
            if (j.contains("name")) w.name = j["name"].get<std::string>();
        } catch (const json::exception& e) {
            throw Error(sidecar.string() + ": " + e.what());
        }
    }
    w.rows = read_zscore_csv(csv);
    return w;
}

} // namespace imrdmd
