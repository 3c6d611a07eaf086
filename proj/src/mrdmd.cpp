#include "imrdmd/mrdmd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace imrdmd {
namespace {

std::shared_ptr<const DmdResult> empty_result(Index sensors, double delta_t) {
    auto r = std::make_shared<DmdResult>();
    r->modes = CMatrix(sensors, 0);
    r->delta_t = delta_t;
    return r;
}

} // namespace

// Rank from the policy, capped to the numerical rank of the factors.
Index usable_rank(const SvdFactors& f, const RankPolicy& policy) {
    if (f.rank() == 0 || f.sigma[0] <= 0.0) return 0;
    const double tol = std::numeric_limits<double>::epsilon() *
                       static_cast<double>(std::max(f.rows(), f.cols())) * f.sigma[0];
    Index numerical = 0;
    while (numerical < f.rank() && f.sigma[numerical] > tol) ++numerical;
    RankPolicy p = policy;
    if (p.kind == RankPolicy::Kind::explicit_rank) p.rank = std::min(p.rank, f.rank());
    return std::min(numerical, select_rank(f.sigma, f.rows(), f.cols(), p));
}

std::shared_ptr<const DmdResult> slow_modes_from_factors(const SvdFactors& factors,
                                                        const Vector& first_snapshot,
                                                        const Vector& last_snapshot, Index stride,
                                                        double delta_t, double rho,
                                                        const RankPolicy& policy, DmdOperator op) {
    const Index r = usable_rank(factors, policy);
    if (r == 0) return empty_result(factors.rows(), delta_t);
    const DmdResult fitted =
        fit_dmd_from_factors(factors, last_snapshot, first_snapshot,
                             static_cast<double>(stride) * delta_t, RankPolicy::fixed(r), op);
    const DmdResult original = rescale_time(fitted, delta_t);
    const auto slow = slow_mode_indices(original, rho);
    return std::make_shared<const DmdResult>(select_modes(original, slow));
}

double rho_for_window(Index window_len, int max_cycles) {
    if (window_len < 2) throw Error("rho_for_window: window must hold at least 2 steps");
    if (max_cycles < 1) throw Error("rho_for_window: max_cycles must be at least 1");
    return static_cast<double>(max_cycles) / static_cast<double>(window_len);
}

Index stride_for_rho(double rho) {
    if (!(rho > 0)) throw Error("stride_for_rho: rho must be positive");
    // 8 samples per threshold cycle; the epsilon absorbs 1/(8*rho) landing a hair under an integer.
    const double s = std::floor(1.0 / (8.0 * rho) + 1e-9);
    return std::max<Index>(1, static_cast<Index>(s));
}

NodeFit fit_node(const Eigen::Ref<const Matrix>& data, int level, Index t_start, double delta_t,
                 const MrDmdConfig& config, bool keep_cache) {
    const Index w = data.cols();
    const Index p = data.rows();
    NodeFit out;
    MrDmdNode& node = out.node;
    node.level = level;
    node.t_start = t_start;
    node.t_end = t_start + w;
    node.dmd = empty_result(p, delta_t);

    if (w < std::max<Index>(config.min_window, 2)) {
        node.rho = w >= 2 ? rho_for_window(w, config.max_cycles) : 0.5;
        out.residual = data;
        return out;
    }
    node.rho = rho_for_window(w, config.max_cycles);
    node.stride = stride_for_rho(node.rho);
    const Index stride = node.stride;
    const Index samples = (w - 1) / stride + 1;

    Matrix sampled(p, samples);
    for (Index j = 0; j < samples; ++j) sampled.col(j) = data.col(j * stride);

    SvdFactors factors = truncated_svd(sampled.leftCols(samples - 1));
    node.dmd = slow_modes_from_factors(factors, sampled.col(0), sampled.col(samples - 1), stride,
                                       delta_t, node.rho, config.rank_policy, config.dmd_operator);

    if (node.dmd->rank() > 0) {
        out.residual = data - reconstruct_steps(*node.dmd, w);
    } else {
        out.residual = data;
    }

    if (keep_cache) {
        auto cache = std::make_shared<SvdCache>();
        if (config.cache_max_rank && *config.cache_max_rank < factors.rank()) {
            const Index k = std::max<Index>(1, *config.cache_max_rank);
            factors.u.conservativeResize(Eigen::NoChange, k);
            factors.v.conservativeResize(Eigen::NoChange, k);
            factors.sigma.conservativeResize(k);
        }
        cache->factors = std::move(factors);
        cache->first_snapshot = sampled.col(0);
        cache->last_snapshot = sampled.col(samples - 1);
        cache->stride = stride;
        cache->next_offset = samples * stride;
        node.svd_cache = std::move(cache);
    }
    return out;
}

MrDmdNode fit_subtree(const Eigen::Ref<const Matrix>& data, int level, int last_level, Index t_start,
                      double delta_t, const MrDmdConfig& config, bool cache_top) {
    NodeFit fit = fit_node(data, level, t_start, delta_t, config, cache_top);
    const Index w = data.cols();
    if (level < last_level) {
        const auto left = std::clamp<Index>(
            static_cast<Index>(std::ceil(static_cast<double>(w) * config.split_ratio)), 1, w - 1);
        const Index right = w - left;
        if (left >= config.min_window && right >= config.min_window) {
            const bool cache_children = config.cache_all_levels;
            fit.node.children.reserve(2);
            fit.node.children.push_back(fit_subtree(fit.residual.leftCols(left), level + 1, last_level,
                                                    t_start, delta_t, config, cache_children));
            fit.node.children.push_back(fit_subtree(fit.residual.rightCols(right), level + 1,
                                                    last_level, t_start + left, delta_t, config,
                                                    cache_children));
        }
    }
    return std::move(fit.node);
}

MrDmdTree mrdmd_fit(const SensorMatrix& data, const MrDmdConfig& config) {
    if (config.max_levels < 1) throw Error("mrdmd_fit: max_levels must be at least 1");
    if (config.max_cycles < 1) throw Error("mrdmd_fit: max_cycles must be at least 1");
    if (!(config.split_ratio > 0 && config.split_ratio < 1)) {
        throw Error("mrdmd_fit: split_ratio must lie in (0,1)");
    }
    if (data.steps() < 4) throw Error("mrdmd_fit: need at least 4 time steps");

    MrDmdTree tree;
    tree.config = config;
    tree.total_timesteps = data.steps();
    tree.delta_t = data.delta_t;
    tree.t0 = data.timestamps.empty() ? 0.0 : data.timestamps.front();
    tree.sensor_ids = data.sensor_ids;
    tree.data_energy = data.values.squaredNorm();
    tree.root = fit_subtree(data.values, 1, config.max_levels, 0, data.delta_t, config, true);
    return tree;
}

Matrix node_reconstruct(const MrDmdNode& node, double delta_t, Index t_start, Index t_end,
                        const std::optional<std::vector<Index>>& mask) {
    const Index lo = std::max(t_start, node.t_start);
    const Index hi = std::min(t_end, node.t_end);
    const Index p = node.dmd ? node.dmd->sensors() : 0;
    if (hi <= lo || !node.dmd || node.dmd->rank() == 0) return Matrix::Zero(p, std::max<Index>(0, hi - lo));
    std::vector<double> times(static_cast<std::size_t>(hi - lo));
    for (Index k = lo; k < hi; ++k) {
        times[static_cast<std::size_t>(k - lo)] = static_cast<double>(k - node.t_start) * delta_t;
    }
    return reconstruct(*node.dmd, times, mask);
}

namespace {

void accumulate(const MrDmdNode& node, const std::string& path, double delta_t, Index t_start,
                Index t_end, const ModeSelection* selection, Matrix& out) {
    if (node.t_end <= t_start || node.t_start >= t_end) return;
    if (node.mode_count() > 0) {
        std::optional<std::vector<Index>> mask;
        if (selection) {
            std::vector<Index> keep;
            for (auto it = selection->lower_bound(ModeKey{path, 0});
                 it != selection->end() && it->node_path == path; ++it) {
                if (it->mode < node.mode_count()) keep.push_back(it->mode);
            }
            mask = std::move(keep);
        }
        if (!mask || !mask->empty()) {
            const Index lo = std::max(t_start, node.t_start);
            const Index hi = std::min(t_end, node.t_end);
            out.middleCols(lo - t_start, hi - lo) += node_reconstruct(node, delta_t, lo, hi, mask);
        }
    }
    for (std::size_t c = 0; c < node.children.size(); ++c) {
        accumulate(node.children[c], path + "." + std::to_string(c), delta_t, t_start, t_end,
                   selection, out);
    }
}

} // namespace

Matrix mrdmd_reconstruct(const MrDmdTree& tree, Index t_start, Index t_end,
                         const ModeSelection* selection) {
    if (t_start < 0 || t_end > tree.total_timesteps || t_start > t_end) {
        throw Error("mrdmd_reconstruct: range outside [0," + std::to_string(tree.total_timesteps) + ")");
    }
    Matrix out = Matrix::Zero(tree.sensors(), t_end - t_start);
    accumulate(tree.root, "0", tree.delta_t, t_start, t_end, selection, out);
    return out;
}

void visit_nodes(const MrDmdNode& root, const NodeVisitor& fn, const std::string& root_path) {
    fn(root, root_path);
    for (std::size_t c = 0; c < root.children.size(); ++c) {
        visit_nodes(root.children[c], fn, root_path + "." + std::to_string(c));
    }
}

std::vector<std::pair<Index, Index>> leaf_windows(const MrDmdTree& tree) {
    std::vector<std::pair<Index, Index>> out;
    visit_nodes(tree, [&](const MrDmdNode& n, const std::string&) {
        if (n.children.empty()) out.emplace_back(n.t_start, n.t_end);
    });
    return out;
}

int tree_depth(const MrDmdTree& tree) {
    int depth = 0;
    visit_nodes(tree, [&](const MrDmdNode& n, const std::string&) { depth = std::max(depth, n.level); });
    return depth;
}

Index node_count(const MrDmdTree& tree) {
    Index count = 0;
    visit_nodes(tree, [&](const MrDmdNode&, const std::string&) { ++count; });
    return count;
}

} // namespace imrdmd
