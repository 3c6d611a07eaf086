#include "imrdmd/serialize.hpp"
#include "imrdmd/incremental.hpp"
#include "imrdmd/spectrum.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace imrdmd;

namespace {

SensorMatrix wave_data(Index p, Index t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<SyntheticComponent> comps;
    for (double rate : {0.001, 0.02}) {
        SyntheticComponent c;
        c.pattern = oracle::gaussian(p, 1, rng);
        c.quadrature = oracle::gaussian(p, 1, rng);
        c.frequency_hz = rate;
        comps.push_back(c);
    }
    return generate_synthetic(p, t, comps, 0.05, 1.0, seed).matrix;
}

MrDmdTree sample_tree() {
    const auto data = wave_data(12, 600, 5);
    auto tree = mrdmd_fit(window(data, 0, 400));
    return partial_fit(tree, window(data, 400, 600)).tree;
}

} // namespace

TEST(Serialize, RoundTripIsExact) {
    const MrDmdTree tree = sample_tree();
    const std::string bytes = serialize_tree(tree);
    const MrDmdTree back = deserialize_tree(bytes);
    EXPECT_EQ(serialize_tree(back), bytes);
    EXPECT_EQ(back.total_timesteps, tree.total_timesteps);
    EXPECT_EQ(back.sensor_ids, tree.sensor_ids);
    EXPECT_EQ(back.config.max_levels, tree.config.max_levels);
    EXPECT_EQ(back.config.rank_policy, tree.config.rank_policy);
    EXPECT_EQ(back.data_energy, tree.data_energy);
    EXPECT_EQ(node_count(back), node_count(tree));
    EXPECT_EQ(leaf_windows(back), leaf_windows(tree));
    const Matrix a = mrdmd_reconstruct(tree, 0, tree.total_timesteps);
    const Matrix b = mrdmd_reconstruct(back, 0, back.total_timesteps);
    EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0);
    ASSERT_TRUE(back.root.svd_cache);
    EXPECT_EQ(back.root.svd_cache->factors.sigma, tree.root.svd_cache->factors.sigma);
    EXPECT_EQ(back.root.svd_cache->next_offset, tree.root.svd_cache->next_offset);
}

TEST(Serialize, SpectrumInvariant) {
    const MrDmdTree tree = sample_tree();
    const auto before = spectrum_of(tree);
    const auto after = spectrum_of(deserialize_tree(serialize_tree(tree)));
    ASSERT_EQ(before.size(), after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
        EXPECT_EQ(before[i].node_path, after[i].node_path);
        EXPECT_EQ(before[i].mode_index, after[i].mode_index);
        EXPECT_EQ(before[i].frequency_hz, after[i].frequency_hz);
        EXPECT_EQ(before[i].power, after[i].power);
    }
}

TEST(Serialize, ReloadedTreeKeepsStreaming) {
    const auto data = wave_data(12, 700, 9);
    const auto tree = mrdmd_fit(window(data, 0, 500));
    const auto reloaded = deserialize_tree(serialize_tree(tree));
    const auto a = partial_fit(tree, window(data, 500, 700)).tree;
    const auto b = partial_fit(reloaded, window(data, 500, 700)).tree;
    EXPECT_EQ(serialize_tree(a), serialize_tree(b));
}

TEST(Serialize, FileRoundTrip) {
    const MrDmdTree tree = sample_tree();
    const auto path = std::filesystem::temp_directory_path() / "imrdmd_tree_test.imrdmd";
    save_tree(tree, path);
    EXPECT_EQ(serialize_tree(load_tree(path)), serialize_tree(tree));
    EXPECT_THROW(load_tree(path.string() + ".missing"), Error);
}

TEST(Serialize, BadMagicRejected) {
    std::string bytes = serialize_tree(sample_tree());
    bytes[0] = 'X';
    EXPECT_THROW(deserialize_tree(bytes), Error);
    EXPECT_THROW(deserialize_tree("short"), Error);
}

TEST(Serialize, TruncationRejected) {
    const std::string bytes = serialize_tree(sample_tree());
    for (std::size_t cut : {std::size_t{10}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        EXPECT_THROW(deserialize_tree(std::string_view(bytes).substr(0, cut)), Error) << cut;
    }
    EXPECT_THROW(deserialize_tree(bytes + "x"), Error);
}

TEST(Serialize, UnsupportedVersionRejected) {
    std::string bytes = serialize_tree(sample_tree());
    bytes[8] = static_cast<char>(kTreeFormatVersion + 1);
    try {
        deserialize_tree(bytes);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
    }
}

TEST(Serialize, ConfigJson) {
    MrDmdConfig c;
    c.max_levels = 6;
    c.max_cycles = 3;
    c.rank_policy = RankPolicy::fixed(5);
    c.split_ratio = 0.25;
    c.cache_max_rank = 40;
    c.dmd_operator = DmdOperator::exact;
    const MrDmdConfig back = config_from_json(config_to_json(c));
    EXPECT_EQ(back.max_levels, 6);
    EXPECT_EQ(back.max_cycles, 3);
    EXPECT_EQ(back.rank_policy, RankPolicy::fixed(5));
    EXPECT_EQ(back.split_ratio, 0.25);
    EXPECT_EQ(back.cache_max_rank, std::optional<Index>(40));
    EXPECT_EQ(back.dmd_operator, DmdOperator::exact);
    EXPECT_EQ(config_from_json(nlohmann::json::object()).dmd_operator, DmdOperator::forward_backward);
    EXPECT_THROW(config_from_json({{"operator", "backward"}}), Error);
    EXPECT_EQ(rank_policy_from_json("svht"), RankPolicy::hard_threshold());
    EXPECT_EQ(rank_policy_from_json("full"), RankPolicy::full_rank());
    EXPECT_THROW(rank_policy_from_json("most"), Error);
}
