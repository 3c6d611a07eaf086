#pragma once

#include "imrdmd/mrdmd.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace imrdmd {

/// Tree file layout (all integers and reals little-endian):
///
///   8 bytes   magic "IMRDMDTR"
///   u32       format version (kTreeFormatVersion)
///   u64       header length, then that many bytes of UTF-8 JSON holding the
///             config, timeline, sensor ids and a description of the node record
///   records   one per node, depth-first pre-order, left child first
///
/// Node record: i32 level, i64 t_start, i64 t_end, i64 stride, f64 rho,
/// u8 flags (1 = has children, 2 = has svd cache), i64 rank,
/// f64 delta_t, then rank complex eigenvalues, exponents and amplitudes and
/// the P x rank complex modes in column-major order; complex values are
/// (re, im) f64 pairs. A cache adds i64 rows, i64 cols, i64 k, sigma[k],
/// u (rows x k), v (cols x k), i64 updates, first and last snapshot (rows
/// each), i64 stride, i64 next_offset.
inline constexpr std::uint32_t kTreeFormatVersion = 1;

std::string serialize_tree(const MrDmdTree& tree);
MrDmdTree deserialize_tree(std::string_view bytes);

void save_tree(const MrDmdTree& tree, const std::filesystem::path& path);
MrDmdTree load_tree(const std::filesystem::path& path);

nlohmann::json config_to_json(const MrDmdConfig& config);
/// Overrides fields of `base` present in `j`.
MrDmdConfig config_from_json(const nlohmann::json& j, MrDmdConfig base = {});

nlohmann::json rank_policy_to_json(const RankPolicy& p);
RankPolicy rank_policy_from_json(const nlohmann::json& j);

} // namespace imrdmd
