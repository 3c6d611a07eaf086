#include "imrdmd/cli.hpp"
#include "imrdmd/serialize.hpp"
#include "imrdmd/timeseries.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace imrdmd;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("imrdmd_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// synth + fit in `d`; returns the tree path
fs::path fitted(const fs::path& d) {
    const auto s = cli({"--seed", "11", "--out", d.string(), "synth", "--sensors", "12", "--steps", "400",
                        "--chunks", "1", "--chunk-size", "64", "--noise", "0.05", "--rates", "0.002,0.03"});
    EXPECT_EQ(s.code, 0) << s.err;
    const auto f = cli({"--out", d.string(), "fit", (d / "synth.csv").string()});
    EXPECT_EQ(f.code, 0) << f.err;
    return d / "tree.imrdmd";
}

} // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(cli({}).code, kExitUsage);
    EXPECT_EQ(cli({"fly"}).code, kExitUsage);
    EXPECT_EQ(cli({"fit"}).code, kExitUsage);
    EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, MissingInputFails) {
    const auto d = fresh_dir("missing");
    const auto r = cli({"--out", d.string(), "fit", (d / "absent.csv").string()});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("absent.csv"), std::string::npos);
    EXPECT_NE(cli({"spectrum", (d / "absent.imrdmd").string()}).code, 0);
}

TEST(Cli, SynthDeterministicUnderSeed) {
    const auto a = fresh_dir("synth_a");
    const auto b = fresh_dir("synth_b");
    const auto c = fresh_dir("synth_c");
    for (const auto& d : {a, b}) ASSERT_EQ(cli({"--seed", "5", "--out", d.string(), "synth", "--steps", "100"}).code, 0);
    ASSERT_EQ(cli({"--seed", "6", "--out", c.string(), "synth", "--steps", "100"}).code, 0);
    EXPECT_EQ(slurp(a / "synth.csv"), slurp(b / "synth.csv"));
    EXPECT_EQ(slurp(a / "synth_sensors.json"), slurp(b / "synth_sensors.json"));
    EXPECT_NE(slurp(a / "synth.csv"), slurp(c / "synth.csv"));
}

TEST(Cli, FitThenPartialFit) {
    const auto d = fresh_dir("partial");
    const auto tree = fitted(d);
    const auto r = cli({"--out", d.string(), "partial-fit", tree.string(), (d / "synth_chunk1.csv").string(),
                        "--tree-out", "tree2.imrdmd"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("timesteps: 464"), std::string::npos) << r.out;
    EXPECT_EQ(load_tree(d / "tree2.imrdmd").total_timesteps, 464);
    EXPECT_EQ(load_tree(tree).total_timesteps, 400);
}

TEST(Cli, ZeroWidthChunkHasNoDrift) {
    const auto d = fresh_dir("zero");
    const auto tree = fitted(d);
    const auto before = slurp(tree);
    {
        std::ifstream in(d / "synth.csv");
        std::string header;
        std::getline(in, header);
        std::ofstream(d / "empty.csv") << header << "\n";
    }
    const auto r = cli({"partial-fit", tree.string(), (d / "empty.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("drift: 0 "), std::string::npos) << r.out;
    EXPECT_EQ(slurp(tree), before);
}

TEST(Cli, SensorMismatchFails) {
    const auto d = fresh_dir("mismatch");
    const auto tree = fitted(d);
    std::ofstream(d / "other.csv") << "timestamp,x,y\n400,1,2\n401,1,2\n";
    const auto r = cli({"partial-fit", tree.string(), (d / "other.csv").string()});
    EXPECT_EQ(r.code, kExitError);
    EXPECT_NE(r.err.find("sensors"), std::string::npos) << r.err;
}

TEST(Cli, EmptySelectionExitsThree) {
    const auto d = fresh_dir("empty_sel");
    const auto tree = fitted(d);
    auto r = cli({"--out", d.string(), "spectrum", tree.string(), "--fmin", "1000"});
    EXPECT_EQ(r.code, kExitEmptySelection);
    EXPECT_NE(r.err.find("no modes"), std::string::npos);
    EXPECT_TRUE(fs::exists(d / "spectrum.csv"));
    r = cli({"--out", d.string(), "zscore", tree.string(), "--fmin", "1000"});
    EXPECT_EQ(r.code, kExitEmptySelection);
}

TEST(Cli, SpectrumZscoreExport) {
    const auto d = fresh_dir("pipeline");
    const auto tree = fitted(d);
    ASSERT_EQ(cli({"--out", d.string(), "spectrum", tree.string()}).code, 0);
    EXPECT_TRUE(fs::exists(d / "spectrum.svg"));
    const auto z = cli({"--out", d.string(), "zscore", tree.string(), "--sensor-map",
                        (d / "synth_sensors.json").string(), "--window", "0:200", "--name", "early"});
    ASSERT_EQ(z.code, 0) << z.err;
    const auto rows = read_zscore_csv(d / "zscore_early.csv");
    EXPECT_EQ(rows.size(), 12u);
    std::ofstream(d / "ann.json") << R"({"hardware_errors": ["r0-0c0s0b0n0"]})";
    const auto e = cli({"--out", d.string(), "export-ui", tree.string(), "--zscores", (d / "zscore_early.csv").string(),
                        "--annotations", (d / "ann.json").string(), "--data", (d / "synth.csv").string(),
                        "--sensor-map", (d / "synth_sensors.json").string()});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_TRUE(fs::exists(d / "bundle" / "meta.json"));
    std::ofstream(d / "bad.json") << R"({"hardware_errors": ["r5-0c0s0b0n0"]})";
    const auto bad = cli({"--out", d.string(), "export-ui", tree.string(), "--annotations", (d / "bad.json").string(),
                          "--sensor-map", (d / "synth_sensors.json").string()});
    EXPECT_EQ(bad.code, kExitError);
    EXPECT_NE(bad.err.find("r5-0c0s0b0n0"), std::string::npos);
}

TEST(Cli, SingleSizeBenchmark) {
    const auto d = fresh_dir("bench");
    const auto r = cli({"--out", d.string(), "benchmark", "--sizes", "300", "--sensors", "20", "--chunk", "50",
                        "--repeats", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string line;
    std::vector<std::string> all;
    while (std::getline(lines, line)) all.push_back(line);
    ASSERT_EQ(all.size(), 2u) << r.out;
    EXPECT_NE(all[0].find("Initial Fit"), std::string::npos);
    EXPECT_NE(all[1].find("300"), std::string::npos);
    EXPECT_TRUE(fs::exists(d / "benchmark.csv"));
}

TEST(Cli, RunConfigJson) {
    const auto j = nlohmann::json::parse(R"({"max_levels": 5, "rank": 3, "frequency_band": [0.01, null],
        "power_floor": {"quantile": 0.9}, "baseline": {"band": [10, 40]}, "aggregation": "sum_squares"})");
    const RunConfig c = run_config_from_json(j);
    EXPECT_EQ(c.mrdmd.max_levels, 5);
    EXPECT_EQ(c.mrdmd.rank_policy, RankPolicy::fixed(3));
    EXPECT_EQ(c.band_low_hz, 0.01);
    EXPECT_TRUE(std::isinf(c.band_high_hz));
    EXPECT_EQ(c.power_floor.kind, PowerFloor::Kind::quantile);
    EXPECT_EQ(c.baseline.band_high, 40.0);
    EXPECT_EQ(c.aggregation, Aggregation::sum_squares);
    const RunConfig back = run_config_from_json(run_config_to_json(c));
    EXPECT_EQ(run_config_to_json(back), run_config_to_json(c));
    EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"layout": "nonsense"})")), Error);
}
