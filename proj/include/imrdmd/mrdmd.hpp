#pragma once

#include "imrdmd/dmd.hpp"

#include <compare>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace imrdmd {

/// State a node keeps so its decomposition can be extended with new columns.
struct SvdCache {
    SvdFactors factors;    ///< untruncated factors of the subsampled X
    Vector first_snapshot; ///< x_0 of the node window (amplitude reference)
    Vector last_snapshot;  ///< final subsampled snapshot (last column of Y)
    Index stride = 1;
    Index next_offset = 0; ///< next sample position, relative to the node start
};

struct MrDmdConfig {
    int max_levels = 4;
    int max_cycles = 2;
    RankPolicy rank_policy = RankPolicy::hard_threshold();
    DmdOperator dmd_operator = DmdOperator::forward_backward;
    double split_ratio = 0.5;
    Index min_window = 4;
    bool cache_all_levels = false;
    std::optional<Index> cache_max_rank;
};

struct MrDmdNode {
    int level = 1;
    Index t_start = 0;
    Index t_end = 0;
    Index stride = 1;
    double rho = 0;
    std::shared_ptr<const DmdResult> dmd; ///< slow modes only, in delta_t units
    std::vector<MrDmdNode> children;      ///< empty or exactly two
    std::shared_ptr<const SvdCache> svd_cache;

    Index width() const { return t_end - t_start; }
    Index mode_count() const { return dmd ? dmd->rank() : 0; }
};

struct MrDmdTree {
    MrDmdNode root;
    MrDmdConfig config;
    Index total_timesteps = 0;
    double delta_t = 1.0;
    double t0 = 0.0; ///< timestamp of column 0
    std::vector<std::string> sensor_ids;
    double data_energy = 0.0; ///< squared Frobenius norm of every column fitted so far

    Index sensors() const { return static_cast<Index>(sensor_ids.size()); }
};

/// A retained mode addressed by node path ("0", "0.1", ...) and index.
struct ModeKey {
    std::string node_path;
    Index mode = 0;
    auto operator<=>(const ModeKey&) const = default;
};
using ModeSelection = std::set<ModeKey>;

double rho_for_window(Index window_len, int max_cycles);
Index stride_for_rho(double rho);

/// Rank under `policy`, capped at the numerical rank of the factors (0 when null).
Index usable_rank(const SvdFactors& f, const RankPolicy& policy);

/// DMD of a subsampled window from untruncated factors of its X, rescaled to
/// `delta_t` units and reduced to modes at most `rho` cycles per step.
std::shared_ptr<const DmdResult> slow_modes_from_factors(const SvdFactors& factors,
                                                        const Vector& first_snapshot,
                                                        const Vector& last_snapshot, Index stride,
                                                        double delta_t, double rho,
                                                        const RankPolicy& policy,
                                                        DmdOperator op = DmdOperator::forward_backward);

struct NodeFit {
    MrDmdNode node;
    Matrix residual;
};

/// Fits the slow modes of one window and returns the dense residual.
NodeFit fit_node(const Eigen::Ref<const Matrix>& data, int level, Index t_start, double delta_t,
                 const MrDmdConfig& config, bool keep_cache = false);

/// Recursive fit of `data` placed at `t_start`, from `level` down to `last_level`.
MrDmdNode fit_subtree(const Eigen::Ref<const Matrix>& data, int level, int last_level, Index t_start,
                      double delta_t, const MrDmdConfig& config, bool cache_top);

MrDmdTree mrdmd_fit(const SensorMatrix& data, const MrDmdConfig& config = {});

/// Sum of every active node's slow reconstruction over [t_start, t_end).
/// With a selection, only the listed modes contribute.
Matrix mrdmd_reconstruct(const MrDmdTree& tree, Index t_start, Index t_end,
                         const ModeSelection* selection = nullptr);

/// Slow reconstruction of one node restricted to [t_start, t_end).
Matrix node_reconstruct(const MrDmdNode& node, double delta_t, Index t_start, Index t_end,
                        const std::optional<std::vector<Index>>& mask = std::nullopt);

using NodeVisitor = std::function<void(const MrDmdNode&, const std::string& path)>;

/// Depth-first pre-order walk, left child first.
void visit_nodes(const MrDmdNode& root, const NodeVisitor& fn, const std::string& root_path = "0");
inline void visit_nodes(const MrDmdTree& tree, const NodeVisitor& fn) { visit_nodes(tree.root, fn); }

std::vector<std::pair<Index, Index>> leaf_windows(const MrDmdTree& tree);
int tree_depth(const MrDmdTree& tree);
Index node_count(const MrDmdTree& tree);

} // namespace imrdmd
