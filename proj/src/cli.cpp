#include "imrdmd/cli.hpp"

#include "imrdmd/benchmark.hpp"
#include "imrdmd/bundle.hpp"
#include "imrdmd/incremental.hpp"
#include "imrdmd/layout.hpp"
#include "imrdmd/serialize.hpp"
#include "imrdmd/server.hpp"
#include "imrdmd/timeseries.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>

namespace imrdmd {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

double bound_or(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

json bound_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
};

RunConfig resolve_config(const Globals& g) {
    RunConfig c = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
    if (!g.out_dir.empty()) c.output_dir = g.out_dir;
    return c;
}

fs::path out_path(const RunConfig& c, const std::string& name) {
    fs::create_directories(c.output_dir);
    return fs::path(c.output_dir) / name;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::map<std::string, std::pair<Index, Index>> node_windows(const MrDmdTree& tree) {
    std::map<std::string, std::pair<Index, Index>> out;
    visit_nodes(tree, [&](const MrDmdNode& n, const std::string& path) { out[path] = {n.t_start, n.t_end}; });
    return out;
}

void print_fit_report(std::ostream& out, const MrDmdTree& tree, double gap, double data_norm, double secs) {
    out << std::setprecision(10);
    out << "timesteps: " << tree.total_timesteps << "\n";
    out << "sensors: " << tree.sensors() << "\n";
    out << "nodes: " << node_count(tree) << " depth: " << tree_depth(tree) << "\n";
    out << "reconstruction_gap: " << gap << "\n";
    out << "relative_gap: " << (data_norm > 0 ? gap / data_norm : 0.0) << "\n";
    out << "fit_seconds: " << secs << "\n";
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error("bad number '" + item + "' in list");
        }
    }
    return out;
}

std::pair<Index, Index> parse_window(const std::string& text, Index total) {
    if (text.empty()) return {0, total};
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw Error("window must be <start>:<end>");
    try {
        const Index a = colon == 0 ? 0 : std::stoll(text.substr(0, colon));
        const Index b = colon + 1 == text.size() ? total : std::stoll(text.substr(colon + 1));
        if (a < 0 || b > total || a >= b) throw Error("window " + text + " outside [0," + std::to_string(total) + ")");
        return {a, b};
    } catch (const std::logic_error&) {
        throw Error("window must be <start>:<end>");
    }
}

// ---- fit

struct FitArgs {
    std::string input;
    std::string tree_name = "tree.imrdmd";
};

int cmd_fit(const Globals& g, const FitArgs& a, std::ostream& out) {
    const RunConfig c = resolve_config(g);
    const SensorMatrix data = ingest_csv(a.input);
    const auto start = std::chrono::steady_clock::now();
    const MrDmdTree tree = mrdmd_fit(data, c.mrdmd);
    const double secs = seconds_since(start);
    const fs::path path = out_path(c, a.tree_name);
    save_tree(tree, path);
    const double gap = reconstruction_gap(mrdmd_reconstruct(tree, 0, tree.total_timesteps), data.values);
    print_fit_report(out, tree, gap, data.values.norm(), secs);
    out << "tree: " << path.string() << "\n";
    return kExitOk;
}

// ---- partial-fit

struct PartialArgs {
    std::string tree;
    std::string chunk;
    std::string history;
    std::string tree_out;
};

int cmd_partial_fit(const Globals& g, const PartialArgs& a, std::ostream& out) {
    const RunConfig c = resolve_config(g);
    const MrDmdTree tree = load_tree(a.tree);
    IngestOptions opts;
    opts.min_rows = 0;
    opts.delta_t = tree.delta_t;
    const SensorMatrix chunk = ingest_csv(a.chunk, opts);
    std::optional<SensorMatrix> history;
    PartialFitOptions po;
    po.threshold = c.drift_threshold;
    if (!a.history.empty()) {
        history = ingest_csv(a.history);
        po.history = &*history;
    }
    const auto start = std::chrono::steady_clock::now();
    const PartialFitResult r = partial_fit(tree, chunk, po);
    const double secs = seconds_since(start);

    const fs::path path = a.tree_out.empty() ? fs::path(a.tree) : out_path(c, a.tree_out);
    save_tree(r.tree, path);

    out << std::setprecision(10);
    out << "timesteps: " << r.tree.total_timesteps << " (+" << chunk.steps() << ")\n";
    out << "nodes: " << node_count(r.tree) << " depth: " << tree_depth(r.tree) << "\n";
    out << "drift: " << r.drift.frobenius_diff << " threshold: " << r.drift.threshold
        << (r.drift.exceeded ? " EXCEEDED" : " ok") << " over [" << r.drift.compared_start << ","
        << r.drift.compared_end << ")\n";
    if (chunk.steps() > 0) {
        const Matrix rec = mrdmd_reconstruct(r.tree, tree.total_timesteps, r.tree.total_timesteps);
        const double gap = reconstruction_gap(rec, chunk.values);
        const double norm = chunk.values.norm();
        out << "chunk_reconstruction_gap: " << gap << "\n";
        out << "chunk_relative_gap: " << (norm > 0 ? gap / norm : 0.0) << "\n";
    }
    if (history) {
        const Matrix rec = mrdmd_reconstruct(r.tree, 0, tree.total_timesteps);
        out << "history_reconstruction_gap: " << reconstruction_gap(rec, history->values) << "\n";
    }
    out << "partial_fit_seconds: " << secs << "\n";
    out << "tree: " << path.string() << "\n";
    return kExitOk;
}

// ---- spectrum

struct SpectrumArgs {
    std::string tree;
    std::optional<double> fmin, fmax, power_floor, power_quantile;
};

FilterResult filter_from(const RunConfig& c, const MrDmdTree& tree, const SpectrumArgs& a) {
    PowerFloor floor = c.power_floor;
    if (a.power_floor) floor = PowerFloor::absolute_floor(*a.power_floor);
    if (a.power_quantile) floor = PowerFloor::quantile_floor(*a.power_quantile);
    return filter_modes(tree, a.fmin.value_or(c.band_low_hz), a.fmax.value_or(c.band_high_hz), floor);
}

int cmd_spectrum(const Globals& g, const SpectrumArgs& a, std::ostream& out, std::ostream& err) {
    const RunConfig c = resolve_config(g);
    const MrDmdTree tree = load_tree(a.tree);
    const auto points = spectrum_of(tree);
    write_spectrum_csv(points, out_path(c, "spectrum.csv"));
    {
        std::ofstream svg(out_path(c, "spectrum.svg"));
        svg << spectrum_svg(points);
    }
    const FilterResult f = filter_from(c, tree, a);
    std::vector<SpectrumPoint> selected;
    for (const auto& p : points) {
        if (f.selection.count(ModeKey{p.node_path, p.mode_index})) selected.push_back(p);
    }
    write_spectrum_csv(selected, out_path(c, "spectrum_selected.csv"));
    out << "modes: " << points.size() << " selected: " << selected.size() << " power_threshold: "
        << f.power_threshold << "\n";
    out << "spectrum: " << out_path(c, "spectrum.csv").string() << "\n";
    if (f.empty_warning || selected.empty()) {
        err << "warning: no modes left after frequency/power filtering\n";
        return kExitEmptySelection;
    }
    return kExitOk;
}

// ---- zscore

struct ZScoreArgs {
    SpectrumArgs filter;
    std::string data;
    std::string sensor_map;
    std::string window;
    std::string name = "window";
    std::string magnitude = "modes";
};

int cmd_zscore(const Globals& g, const ZScoreArgs& a, std::ostream& out, std::ostream& err) {
    const RunConfig c = resolve_config(g);
    const MrDmdTree tree = load_tree(a.filter.tree);
    const auto [t_start, t_end] = parse_window(a.window, tree.total_timesteps);
    std::optional<SensorMatrix> data;
    if (!a.data.empty()) {
        data = ingest_csv(a.data);
        if (data->sensor_ids != tree.sensor_ids) throw Error("data sensors differ from the fitted tree");
    }
    const std::string map_path = a.sensor_map.empty() ? c.sensor_map : a.sensor_map;
    const SensorMap sensor_map = map_path.empty() ? SensorMap{} : load_sensor_map(map_path);

    Vector magnitudes;
    ModeSelection selection;
    if (a.magnitude == "raw") {
        if (!data) throw Error("--magnitude raw needs --data");
        magnitudes = raw_magnitudes(*data, t_start, t_end);
    } else if (a.magnitude == "modes") {
        const FilterResult f = filter_from(c, tree, a.filter);
        const auto windows = node_windows(tree);
        for (const auto& key : f.selection) {
            const auto& w = windows.at(key.node_path);
            if (w.first < t_end && w.second > t_start) selection.insert(key);
        }
        if (selection.empty()) {
            err << "warning: no modes selected for window [" << t_start << "," << t_end << ")\n";
            return kExitEmptySelection;
        }
        magnitudes = sensor_magnitudes(tree, selection, c.aggregation);
    } else {
        throw Error("--magnitude must be modes or raw");
    }

    BaselineSpec spec = c.baseline;
    spec.window_start = t_start;
    spec.window_end = t_end;
    std::vector<Index> baseline;
    if (data) {
        baseline = select_baseline(*data, spec);
    } else if (!spec.explicit_ids.empty()) {
        for (const auto& id : spec.explicit_ids) {
            auto it = std::find(tree.sensor_ids.begin(), tree.sensor_ids.end(), id);
            if (it == tree.sensor_ids.end()) throw Error("baseline sensor '" + id + "' not in the tree");
            baseline.push_back(static_cast<Index>(it - tree.sensor_ids.begin()));
        }
    } else if (std::isinf(spec.band_low) && std::isinf(spec.band_high)) {
        for (Index i = 0; i < tree.sensors(); ++i) baseline.push_back(i);
    } else {
        throw Error("a baseline band needs --data");
    }

    ZScoreReport report = zscores(magnitudes, baseline);
    auto rows = zscore_rows(report, tree.sensor_ids, sensor_map);
    for (auto& row : rows) {
        if (row.node_id.empty()) row.node_id = row.sensor_id;
        if (row.category.empty()) row.category = "default";
    }
    const fs::path path = out_path(c, "zscore_" + a.name + ".csv");
    write_zscore_csv(rows, path);
    write_window_sidecar(path, t_start, t_end);

    std::map<std::string, int> counts;
    for (const auto& row : rows) ++counts[to_string(row.cls)];
    out << std::setprecision(10);
    out << "window: [" << t_start << "," << t_end << ") baseline members: " << report.members
        << " mean: " << report.mean << " std: " << report.stddev << "\n";
    for (const auto& [cls, n] : counts) out << cls << ": " << n << "\n";
    out << "zscores: " << path.string() << "\n";
    return kExitOk;
}

// ---- export-ui

struct ExportArgs {
    std::string tree;
    std::vector<std::string> zscores;
    std::vector<std::string> annotations;
    std::string layout;
    std::string data;
    std::string sensor_map;
    std::string bundle_dir;
    Index series_stride = 1;
    bool no_recon = false;
};

int cmd_export_ui(const Globals& g, const ExportArgs& a, std::ostream& out) {
    const RunConfig c = resolve_config(g);
    const MrDmdTree tree = load_tree(a.tree);
    BundleInputs in;
    in.tree = &tree;
    in.layout = parse_layout(a.layout.empty() ? c.layout : a.layout);
    for (const auto& z : a.zscores) in.windows.push_back(load_zscore_window(z, tree.total_timesteps));
    for (const auto& f : a.annotations) merge_annotations(in.annotations, load_annotations(f));
    std::optional<SensorMatrix> data;
    if (!a.data.empty()) {
        data = ingest_csv(a.data);
        in.data = &*data;
    }
    const std::string map_path = a.sensor_map.empty() ? c.sensor_map : a.sensor_map;
    if (!map_path.empty()) in.sensor_map = load_sensor_map(map_path);
    in.series_stride = a.series_stride;
    in.include_reconstruction = !a.no_recon;

    const UiBundle bundle = build_bundle(in);
    const auto problems = validate_bundle(bundle);
    if (!problems.empty()) {
        std::string msg = "bundle failed validation:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw Error(msg);
    }
    const fs::path dir = a.bundle_dir.empty() ? out_path(c, "bundle") : fs::path(a.bundle_dir);
    write_bundle(bundle, dir);
    out << "bundle: " << dir.string() << " (" << in.layout.node_count() << " nodes, " << in.windows.size()
        << " windows)\n";
    return kExitOk;
}

// ---- serve

struct ServeArgs {
    std::string dir;
    std::string host = "127.0.0.1";
    int port = 8080;
};

int cmd_serve(const Globals& g, const ServeArgs& a) {
    const RunConfig c = resolve_config(g);
    const fs::path dir = a.dir.empty() ? fs::path(c.output_dir) / "bundle" : fs::path(a.dir);
    serve_bundle(dir, a.host, a.port);
    return kExitOk;
}

// ---- benchmark

struct BenchArgs {
    std::string sizes = "2000,5000,10000,16000";
    Index sensors = 1000;
    Index chunk = 1000;
    int repeats = 10;
    double noise = 0.1;
};

int cmd_benchmark(const Globals& g, const BenchArgs& a, std::ostream& out, std::ostream& err) {
    const RunConfig c = resolve_config(g);
    BenchmarkOptions o;
    o.sizes.clear();
    for (double v : parse_number_list(a.sizes)) o.sizes.push_back(static_cast<Index>(v));
    o.sensors = a.sensors;
    o.chunk = a.chunk;
    o.repeats = a.repeats;
    o.seed = g.seed;
    o.noise_sigma = a.noise;
    o.config = c.mrdmd;
    const auto rows = run_benchmark(o, &err);
    out << format_benchmark_table(rows);
    std::ofstream csv(out_path(c, "benchmark.csv"));
    write_benchmark_csv(rows, csv);
    return kExitOk;
}

// ---- synth

struct SynthArgs {
    Index sensors = 32;
    Index steps = 2000;
    double dt = 1.0;
    double noise = 0.5;
    std::string rates = "0.001,0.05";
    std::string amplitudes;
    Index chunks = 0;
    Index chunk_size = 128;
    std::string categories = "temperature";
    std::string layout;
    std::string name = "synth";
};

int cmd_synth(const Globals& g, const SynthArgs& a, std::ostream& out) {
    const RunConfig c = resolve_config(g);
    if (a.chunks < 0 || a.chunk_size < 1) throw Error("chunks must be >= 0 and chunk-size >= 1");
    const auto rates = parse_number_list(a.rates);
    auto amps = parse_number_list(a.amplitudes);
    if (!amps.empty() && amps.size() != rates.size()) throw Error("one amplitude per rate expected");

    std::mt19937_64 rng(g.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
    std::vector<SyntheticComponent> comps;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        SyntheticComponent comp;
        comp.pattern = Vector(a.sensors);
        for (Index p = 0; p < a.sensors; ++p) comp.pattern[p] = normal(rng);
        if (rates[i] > 0) {
            comp.quadrature = Vector(a.sensors);
            for (Index p = 0; p < a.sensors; ++p) comp.quadrature[p] = normal(rng);
        }
        comp.frequency_hz = rates[i] / a.dt;
        comp.amplitude = amps.empty() ? 1.0 : amps[i];
        comp.phase = phase(rng);
        comps.push_back(std::move(comp));
    }
    const Index total = a.steps + a.chunks * a.chunk_size;
    const SyntheticData d = generate_synthetic(a.sensors, total, comps, a.noise, a.dt, g.seed ^ 0x9e3779b97f4a7c15ULL);

    const fs::path main = out_path(c, a.name + ".csv");
    write_csv(window(d.matrix, 0, a.steps), main);
    out << "data: " << main.string() << " (" << a.sensors << " x " << a.steps << ")\n";
    for (Index i = 0; i < a.chunks; ++i) {
        const Index s = a.steps + i * a.chunk_size;
        const fs::path p = out_path(c, a.name + "_chunk" + std::to_string(i + 1) + ".csv");
        write_csv(window(d.matrix, s, s + a.chunk_size), p);
        out << "chunk: " << p.string() << "\n";
    }
    if (a.chunks > 0) {
        const fs::path p = out_path(c, a.name + "_all.csv");
        write_csv(d.matrix, p);
        out << "all: " << p.string() << "\n";
    }

    // sensors spread over the layout, cycling through the categories
    std::vector<std::string> cats;
    {
        std::stringstream ss(a.categories);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) cats.push_back(item);
        }
    }
    if (cats.empty()) cats.push_back("default");
    const auto nodes = enumerate_nodes(parse_layout(a.layout.empty() ? c.layout : a.layout));
    json map = json::object();
    for (Index i = 0; i < a.sensors; ++i) {
        const auto slot = static_cast<std::size_t>(i) / cats.size();
        map[d.matrix.sensor_ids[static_cast<std::size_t>(i)]] = {
            {"node", nodes[slot % nodes.size()].id}, {"category", cats[static_cast<std::size_t>(i) % cats.size()]}};
    }
    const fs::path mp = out_path(c, a.name + "_sensors.json");
    std::ofstream(mp) << map.dump(1) << "\n";
    out << "sensor_map: " << mp.string() << "\n";
    return kExitOk;
}

} // namespace

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw Error("config must be a JSON object");
    RunConfig c;
    c.mrdmd = config_from_json(j);
    try {
        if (j.contains("drift_threshold") && !j["drift_threshold"].is_null()) {
            c.drift_threshold = j["drift_threshold"].get<double>();
        }
        if (j.contains("frequency_band")) {
            const auto& b = j["frequency_band"];
            if (!b.is_array() || b.size() != 2) throw Error("frequency_band must be [low, high]");
            c.band_low_hz = bound_or(b[0], 0.0);
            c.band_high_hz = bound_or(b[1], std::numeric_limits<double>::infinity());
        }
        if (j.contains("power_floor")) {
            const auto& p = j["power_floor"];
            if (p.is_number()) {
                c.power_floor = PowerFloor::absolute_floor(p.get<double>());
            } else if (p.contains("quantile")) {
                c.power_floor = PowerFloor::quantile_floor(p["quantile"].get<double>());
            } else if (p.contains("absolute")) {
                c.power_floor = PowerFloor::absolute_floor(p["absolute"].get<double>());
            } else {
                throw Error("power_floor must be a number, {\"absolute\": x} or {\"quantile\": q}");
            }
        }
        if (j.contains("baseline")) {
            const auto& b = j["baseline"];
            if (b.contains("band")) {
                if (!b["band"].is_array() || b["band"].size() != 2) throw Error("baseline.band must be [low, high]");
                c.baseline.band_low = bound_or(b["band"][0], -std::numeric_limits<double>::infinity());
                c.baseline.band_high = bound_or(b["band"][1], std::numeric_limits<double>::infinity());
            }
            if (b.contains("ids")) c.baseline.explicit_ids = b["ids"].get<std::vector<std::string>>();
            if (b.contains("window")) {
                c.baseline.window_start = b["window"][0].get<Index>();
                if (!b["window"][1].is_null()) c.baseline.window_end = b["window"][1].get<Index>();
            }
        }
        if (j.contains("aggregation")) {
            const auto s = j["aggregation"].get<std::string>();
            if (s == "abs_sum") {
                c.aggregation = Aggregation::abs_sum;
            } else if (s == "sum_squares") {
                c.aggregation = Aggregation::sum_squares;
            } else {
                throw Error("aggregation must be abs_sum or sum_squares");
            }
        }
        if (j.contains("layout")) c.layout = j["layout"].get<std::string>();
        if (j.contains("sensor_map")) c.sensor_map = j["sensor_map"].get<std::string>();
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    } catch (const json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    parse_layout(c.layout);
    return c;
}

json run_config_to_json(const RunConfig& c) {
    json j = config_to_json(c.mrdmd);
    j["drift_threshold"] = c.drift_threshold ? json(*c.drift_threshold) : json(nullptr);
    j["frequency_band"] = {c.band_low_hz, bound_json(c.band_high_hz)};
    j["power_floor"] = c.power_floor.kind == PowerFloor::Kind::quantile ? json{{"quantile", c.power_floor.value}}
                                                                          : json{{"absolute", c.power_floor.value}};
    json baseline = {{"band", {bound_json(c.baseline.band_low), bound_json(c.baseline.band_high)}},
                     {"ids", c.baseline.explicit_ids},
                     {"window", {c.baseline.window_start,
                                 c.baseline.window_end ? json(*c.baseline.window_end) : json(nullptr)}}};
    j["baseline"] = baseline;
    j["aggregation"] = c.aggregation == Aggregation::abs_sum ? "abs_sum" : "sum_squares";
    j["layout"] = c.layout;
    j["sensor_map"] = c.sensor_map;
    j["output_dir"] = c.output_dir;
    return j;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error("config " + path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Streaming multiresolution DMD for sensor telemetry"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "run configuration JSON")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "seed for synthetic data");
    app.add_option("--out", g.out_dir, "output directory");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit a tree from a CSV");
    fit_cmd->add_option("input", fit.input, "timestamp,<sensor>... CSV")->required();
    fit_cmd->add_option("--tree", fit.tree_name, "tree file name inside --out");

    PartialArgs part;
    auto* part_cmd = app.add_subcommand("partial-fit", "append a CSV chunk to a fitted tree");
    part_cmd->add_option("tree", part.tree)->required();
    part_cmd->add_option("chunk", part.chunk)->required();
    part_cmd->add_option("--history", part.history, "CSV of the already fitted columns; refits the left subtree");
    part_cmd->add_option("--tree-out", part.tree_out, "write the updated tree here (inside --out) instead of in place");

    auto add_filter = [](CLI::App* cmd, SpectrumArgs& s) {
        cmd->add_option("tree", s.tree)->required();
        cmd->add_option("--fmin", s.fmin, "lowest frequency kept, Hz");
        cmd->add_option("--fmax", s.fmax, "highest frequency kept, Hz");
        cmd->add_option("--power-floor", s.power_floor, "absolute minimum mode power");
        cmd->add_option("--power-quantile", s.power_quantile, "keep modes at or above this power quantile");
    };
    SpectrumArgs spec;
    auto* spec_cmd = app.add_subcommand("spectrum", "export the mode spectrum as CSV and SVG");
    add_filter(spec_cmd, spec);

    ZScoreArgs zs;
    auto* zs_cmd = app.add_subcommand("zscore", "score sensors against the baseline");
    add_filter(zs_cmd, zs.filter);
    zs_cmd->add_option("--data", zs.data, "CSV the tree was fitted on");
    zs_cmd->add_option("--sensor-map", zs.sensor_map, "sensor -> node/category JSON");
    zs_cmd->add_option("--window", zs.window, "<start>:<end> time steps");
    zs_cmd->add_option("--name", zs.name, "window name");
    zs_cmd->add_option("--magnitude", zs.magnitude, "modes or raw");

    ExportArgs ex;
    auto* ex_cmd = app.add_subcommand("export-ui", "write the UI bundle");
    ex_cmd->add_option("tree", ex.tree)->required();
    ex_cmd->add_option("--zscores", ex.zscores, "z-score CSV, repeatable");
    ex_cmd->add_option("--annotations", ex.annotations, "annotation JSON, repeatable");
    ex_cmd->add_option("--layout", ex.layout, "rack layout string");
    ex_cmd->add_option("--data", ex.data, "raw CSV for the series panel");
    ex_cmd->add_option("--sensor-map", ex.sensor_map, "sensor -> node/category JSON");
    ex_cmd->add_option("--bundle-dir", ex.bundle_dir, "defaults to <out>/bundle");
    ex_cmd->add_option("--series-stride", ex.series_stride, "keep every n-th step in series.json")
        ->check(CLI::PositiveNumber);
    ex_cmd->add_flag("--no-recon", ex.no_recon, "leave reconstructions out of series.json");

    ServeArgs sv;
    auto* sv_cmd = app.add_subcommand("serve", "serve a bundle directory over HTTP");
    sv_cmd->add_option("dir", sv.dir, "bundle directory, defaults to <out>/bundle");
    sv_cmd->add_option("--host", sv.host);
    sv_cmd->add_option("--port", sv.port)->check(CLI::Range(0, 65535));

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("benchmark", "time initial and partial fits");
    bench_cmd->add_option("--sizes", bench.sizes, "comma-separated T values");
    bench_cmd->add_option("--sensors", bench.sensors)->check(CLI::PositiveNumber);
    bench_cmd->add_option("--chunk", bench.chunk)->check(CLI::PositiveNumber);
    bench_cmd->add_option("--repeats", bench.repeats)->check(CLI::PositiveNumber);
    bench_cmd->add_option("--noise", bench.noise);

    SynthArgs syn;
    auto* syn_cmd = app.add_subcommand("synth", "generate synthetic sensor data");
    syn_cmd->add_option("--sensors", syn.sensors)->check(CLI::PositiveNumber);
    syn_cmd->add_option("--steps", syn.steps)->check(CLI::PositiveNumber);
    syn_cmd->add_option("--dt", syn.dt);
    syn_cmd->add_option("--noise", syn.noise);
    syn_cmd->add_option("--rates", syn.rates, "comma-separated cycles per step");
    syn_cmd->add_option("--amplitudes", syn.amplitudes, "comma-separated, one per rate");
    syn_cmd->add_option("--chunks", syn.chunks, "extra chunk files after the main CSV");
    syn_cmd->add_option("--chunk-size", syn.chunk_size);
    syn_cmd->add_option("--categories", syn.categories, "comma-separated sensor categories");
    syn_cmd->add_option("--layout", syn.layout);
    syn_cmd->add_option("--name", syn.name, "file name prefix");

    std::vector<std::string> argv_store{"imrdmd"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*fit_cmd) return cmd_fit(g, fit, out);
        if (*part_cmd) return cmd_partial_fit(g, part, out);
        if (*spec_cmd) return cmd_spectrum(g, spec, out, err);
        if (*zs_cmd) return cmd_zscore(g, zs, out, err);
        if (*ex_cmd) return cmd_export_ui(g, ex, out);
        if (*sv_cmd) return cmd_serve(g, sv);
        if (*bench_cmd) return cmd_benchmark(g, bench, out, err);
        if (*syn_cmd) return cmd_synth(g, syn, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitUsage;
}

} // namespace imrdmd
