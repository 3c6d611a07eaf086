#include "imrdmd/bundle.hpp"
#include "imrdmd/cli.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace imrdmd;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    SensorMatrix data;
    MrDmdTree tree;
    LayoutSpec layout;
    std::vector<PlacedNode> nodes;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture out;
        std::mt19937_64 rng(3);
        SyntheticComponent c;
        c.pattern = oracle::gaussian(16, 1, rng);
        c.quadrature = oracle::gaussian(16, 1, rng);
        c.frequency_hz = 0.004;
        out.data = generate_synthetic(16, 300, {c}, 0.05, 1.0, 4).matrix;
        for (auto& v : out.data.values.reshaped()) v += 30.0;
        out.tree = mrdmd_fit(out.data);
        out.layout = parse_layout(kDefaultLayout);
        out.nodes = enumerate_nodes(out.layout);
        return out;
    }();
    return f;
}

ZScoreWindow window_rows(const Fixture& f, Index a, Index b) {
    ZScoreWindow w{"w", a, b, {}};
    for (Index s = 0; s < f.data.sensors(); ++s) {
        ZScoreRow r;
        r.sensor_id = f.data.sensor_ids[static_cast<std::size_t>(s)];
        r.node_id = f.nodes[static_cast<std::size_t>(s / 2) * 37].id;
        r.category = s % 2 == 0 ? "temperature" : "power";
        r.magnitude = 1.0 + 0.1 * static_cast<double>(s);
        r.z = -2.0 + 0.3 * static_cast<double>(s);
        r.cls = classify(r.z);
        w.rows.push_back(r);
    }
    return w;
}

BundleInputs inputs(const Fixture& f) {
    BundleInputs in;
    in.tree = &f.tree;
    in.layout = f.layout;
    in.data = &f.data;
    in.windows.push_back(window_rows(f, 0, 150));
    for (const auto& r : in.windows[0].rows) in.sensor_map[r.sensor_id] = {r.node_id, r.category};
    return in;
}

} // namespace

TEST(Bundle, FullRackBundleValidates) {
    const auto& f = fixture();
    auto in = inputs(f);
    in.annotations.hardware_errors = {f.nodes[5].id};
    in.annotations.jobs["job42"] = {f.nodes[0].id, f.nodes[1407].id};
    const UiBundle b = build_bundle(in);
    EXPECT_TRUE(validate_bundle(b).empty());
    EXPECT_EQ(b.layout["nodes"].size(), 1408u);
    EXPECT_EQ(b.meta["node_count"], 1408);
    EXPECT_EQ(b.meta["format"], "imrdmd-ui-bundle");
    EXPECT_EQ(b.meta["total_timesteps"], 300);
    EXPECT_EQ(b.meta["categories"], nlohmann::json::array({"power", "temperature"}));
    EXPECT_EQ(b.layout["layout_string"], kDefaultLayout);
    EXPECT_EQ(b.series["timestamps"].size(), 300u);
    EXPECT_EQ(b.spectrum["points"].size(), spectrum_of(f.tree).size());
}

TEST(Bundle, ZScoresAggregatedPerNode) {
    const auto& f = fixture();
    const UiBundle b = build_bundle(inputs(f));
    const auto w = window_rows(f, 0, 150);
    // one sensor per node and category, so the cell holds that sensor's value
    for (const auto& r : w.rows) {
        const auto& cell = b.zscores["windows"][0]["categories"][r.category][r.node_id];
        EXPECT_DOUBLE_EQ(cell["z"].get<double>(), r.z);
        EXPECT_DOUBLE_EQ(cell["value"].get<double>(), r.magnitude);
        EXPECT_EQ(cell["class"], to_string(classify(r.z)));
    }
}

TEST(Bundle, SeriesAveragesSensors) {
    const auto& f = fixture();
    auto in = inputs(f);
    in.sensor_map.clear();
    for (Index s = 0; s < f.data.sensors(); ++s) {
        in.sensor_map[f.data.sensor_ids[static_cast<std::size_t>(s)]] = {f.nodes[0].id, "temperature"};
    }
    in.windows.clear();
    in.series_stride = 7;
    const UiBundle b = build_bundle(in);
    EXPECT_TRUE(validate_bundle(b).empty());
    const auto& raw = b.series["nodes"][f.nodes[0].id]["temperature"]["raw"];
    ASSERT_EQ(raw.size(), (300u + 6) / 7);
    for (std::size_t j = 0; j < raw.size(); ++j) {
        EXPECT_NEAR(raw[j].get<double>(), f.data.values.col(static_cast<Index>(j) * 7).mean(), 1e-9);
    }
}

TEST(Bundle, UnknownAnnotationIdNamed) {
    const auto& f = fixture();
    auto in = inputs(f);
    in.annotations.hardware_errors = {"r9-9c9s9b9n9"};
    try {
        build_bundle(in);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("r9-9c9s9b9n9"), std::string::npos);
    }
    in.annotations.hardware_errors.clear();
    in.annotations.jobs["j"] = {"bogus"};
    EXPECT_THROW(build_bundle(in), Error);
}

TEST(Bundle, EmptyAnnotationsValid) {
    const auto& f = fixture();
    const UiBundle b = build_bundle(inputs(f));
    EXPECT_TRUE(validate_bundle(b).empty());
    EXPECT_TRUE(b.annotations["hardware_errors"].empty());
    EXPECT_TRUE(b.annotations["jobs"].empty());
}

TEST(Bundle, ValidatorCatchesDamage) {
    const auto& f = fixture();
    UiBundle b = build_bundle(inputs(f));
    b.annotations["hardware_errors"].push_back("r7-0c0s0b0n0");
    b.meta.erase("delta_t");
    b.layout["nodes"][1]["x"] = b.layout["nodes"][0]["x"];
    b.layout["nodes"][1]["y"] = b.layout["nodes"][0]["y"];
    const auto problems = validate_bundle(b);
    EXPECT_EQ(problems.size(), 3u);
}

TEST(Bundle, WindowOutsideTimelineRejected) {
    const auto& f = fixture();
    auto in = inputs(f);
    in.windows[0].t_end = 301;
    EXPECT_THROW(build_bundle(in), Error);
}

TEST(Bundle, DiskRoundTripAndSidecar) {
    const auto& f = fixture();
    const UiBundle b = build_bundle(inputs(f));
    const fs::path dir = fs::temp_directory_path() / "imrdmd_bundle_test";
    fs::remove_all(dir);
    write_bundle(b, dir);
    for (const auto& name : bundle_file_names()) EXPECT_TRUE(fs::exists(dir / (name + ".json"))) << name;
    const UiBundle back = read_bundle(dir);
    EXPECT_EQ(back.meta, b.meta);
    EXPECT_EQ(back.zscores, b.zscores);
    EXPECT_EQ(back.layout, b.layout);

    const fs::path csv = dir / "zscore_hot.csv";
    write_zscore_csv(window_rows(f, 20, 80).rows, csv);
    write_window_sidecar(csv, 20, 80);
    const auto w = load_zscore_window(csv, 300);
    EXPECT_EQ(w.t_start, 20);
    EXPECT_EQ(w.t_end, 80);
    EXPECT_EQ(w.rows.size(), 16u);
    fs::remove(csv.string() + ".window.json");
    EXPECT_EQ(load_zscore_window(csv, 300).t_end, 300);
}

TEST(Bundle, AnnotationFiles) {
    const fs::path p = fs::temp_directory_path() / "imrdmd_ann.json";
    std::ofstream(p) << R"({"hardware_errors": ["r0-0c0s0b0n0"], "jobs": {"a": ["r0-0c0s1b0n0"]}})";
    Annotations a = load_annotations(p);
    Annotations more;
    more.hardware_errors = {"r0-0c0s0b0n0", "r0-0c0s2b0n0"};
    more.jobs["a"] = {"r0-0c0s3b0n0"};
    merge_annotations(a, more);
    EXPECT_EQ(a.hardware_errors.size(), 2u);
    EXPECT_EQ(a.jobs["a"].size(), 2u);
    std::ofstream(p) << "[1, 2]";
    EXPECT_THROW(load_annotations(p), Error);
}
