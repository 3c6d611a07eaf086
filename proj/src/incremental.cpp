#include "imrdmd/incremental.hpp"

#include <cmath>
#include <vector>

namespace imrdmd {
namespace {

Complex complex_expm1(Complex z) {
    const double x = z.real();
    const double y = z.imag();
    const double s = std::sin(0.5 * y);
    return {std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y)};
}

// sum_{k=0}^{n-1} exp(z k)
Complex geometric_sum(Complex z, Index n) {
    const auto count = static_cast<double>(n);
    if (std::abs(z) * count < 1e-8) return count + z * count * (count - 1.0) * 0.5;
    const Complex denom = complex_expm1(z);
    if (std::abs(denom) == 0.0) return count;
    return complex_expm1(z * count) / denom;
}

} // namespace

double slow_difference_norm(const DmdResult& a, const DmdResult& b, Index steps) {
    if (a.sensors() != b.sensors()) throw Error("slow_difference_norm: sensor counts differ");
    if (steps <= 0) return 0.0;

    // Columns are weighted modes c_i = phi_i a_i (b's negated); z_i = psi_i * delta_t.
    std::vector<CVector> weighted;
    std::vector<Complex> step_log;
    auto collect = [&](const DmdResult& r, double sign) {
        for (Index i = 0; i < r.rank(); ++i) {
            if (is_nilpotent(r.exponents[i])) continue;
            weighted.emplace_back(r.modes.col(i) * (r.amplitudes[i] * sign));
            step_log.push_back(r.exponents[i] * r.delta_t);
        }
    };
    collect(a, 1.0);
    collect(b, -1.0);

    // sum_k ||Re x_k||^2 = 1/2 sum_k (||x_k||^2 + Re(x_k^T x_k))
    double total = 0.0;
    const std::size_t m = weighted.size();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const Complex herm = weighted[i].dot(weighted[j]); // conj(c_i)^T c_j
            const Complex bilin = (weighted[i].transpose() * weighted[j]).value();
            total += (herm * geometric_sum(std::conj(step_log[i]) + step_log[j], steps)).real();
            total += (bilin * geometric_sum(step_log[i] + step_log[j], steps)).real();
        }
    }
    return std::sqrt(std::max(0.0, 0.5 * total));
}

DriftReport drift_check(const Matrix& old_recon, const Matrix& new_recon, double threshold) {
    if (old_recon.rows() != new_recon.rows() || old_recon.cols() != new_recon.cols()) {
        throw Error("drift_check: reconstruction shapes differ");
    }
    DriftReport d;
    d.frobenius_diff = (new_recon - old_recon).norm();
    d.threshold = threshold;
    d.exceeded = d.frobenius_diff > threshold;
    d.old_t_end = old_recon.cols();
    d.compared_end = old_recon.cols();
    return d;
}

double reconstruction_gap(const Matrix& recon, const Matrix& data) {
    if (recon.rows() != data.rows() || recon.cols() != data.cols()) {
        throw Error("reconstruction_gap: shapes differ");
    }
    return (recon - data).norm();
}

MrDmdNode demote(const MrDmdNode& node, int by) {
    MrDmdNode out;
    out.level = node.level + by;
    out.t_start = node.t_start;
    out.t_end = node.t_end;
    out.stride = node.stride;
    out.rho = node.rho;
    out.dmd = node.dmd;
    out.svd_cache = node.svd_cache;
    out.children.reserve(node.children.size());
    for (const auto& c : node.children) out.children.push_back(demote(c, by));
    return out;
}

PartialFitResult partial_fit(const MrDmdTree& tree, const SensorMatrix& new_data,
                             const PartialFitOptions& options) {
    const Index old_t = tree.total_timesteps;
    const Index fresh = new_data.steps();
    if (new_data.sensors() != tree.sensors()) {
        throw Error("partial_fit: new data has " + std::to_string(new_data.sensors()) +
                    " sensors, tree has " + std::to_string(tree.sensors()));
    }
    if (!new_data.sensor_ids.empty() && new_data.sensor_ids != tree.sensor_ids) {
        throw Error("partial_fit: sensor ids differ from the fitted tree");
    }
    const auto& cache_ptr = tree.root.svd_cache;
    if (!cache_ptr) throw Error("tree not incrementally updatable");

    const double threshold = options.threshold.value_or(0.01 * std::sqrt(tree.data_energy));
    PartialFitResult out;
    out.drift.threshold = threshold;
    out.drift.old_t_start = 0;
    out.drift.old_t_end = old_t;
    out.drift.compared_start = 0;
    out.drift.compared_end = old_t;

    if (fresh == 0) {
        out.tree = tree;
        return out;
    }
    if (std::abs(new_data.delta_t - tree.delta_t) > 1e-6 * tree.delta_t) {
        throw Error("partial_fit: delta_t " + std::to_string(new_data.delta_t) +
                    " differs from the tree's " + std::to_string(tree.delta_t));
    }
    if (!new_data.timestamps.empty()) {
        const double expected = tree.t0 + static_cast<double>(old_t) * tree.delta_t;
        if (std::abs(new_data.timestamps.front() - expected) > 0.1 * tree.delta_t) {
            throw Error("partial_fit: chunk starts at " + std::to_string(new_data.timestamps.front()) +
                        ", expected " + std::to_string(expected));
        }
    }
    if (options.history && (options.history->steps() != old_t ||
                            options.history->sensors() != tree.sensors())) {
        throw Error("partial_fit: history does not match the fitted timeline");
    }

    const MrDmdConfig& config = tree.config;
    const SvdCache& cache = *cache_ptr;
    const Index new_t = old_t + fresh;

    // Level 1: append the newly sampled snapshots on the frozen stride grid.
    auto next = std::make_shared<SvdCache>(cache);
    std::vector<Index> positions;
    for (Index q = cache.next_offset; q < new_t; q += cache.stride) positions.push_back(q - old_t);
    if (!positions.empty()) {
        const auto k = static_cast<Index>(positions.size());
        Matrix appended(tree.sensors(), k);
        appended.col(0) = cache.last_snapshot;
        for (Index j = 1; j < k; ++j) appended.col(j) = new_data.values.col(positions[j - 1]);
        next->factors = incremental_svd_update(cache.factors, appended, config.cache_max_rank);
        next->last_snapshot = new_data.values.col(positions.back());
        next->next_offset = cache.next_offset + k * cache.stride;
    }

    MrDmdNode root;
    root.level = 1;
    root.t_start = 0;
    root.t_end = new_t;
    root.stride = cache.stride;
    root.rho = rho_for_window(new_t, config.max_cycles);
    root.dmd = slow_modes_from_factors(next->factors, next->first_snapshot, next->last_snapshot,
                                       next->stride, tree.delta_t, root.rho, config.rank_policy,
                                       config.dmd_operator);
    root.svd_cache = std::move(next);

    const Matrix residual =
        new_data.values - node_reconstruct(root, tree.delta_t, old_t, new_t);
    const int last_level = std::max(2, config.max_levels);
    MrDmdNode right = fit_subtree(residual, 2, last_level, old_t, tree.delta_t, config,
                                  config.cache_all_levels);

    MrDmdNode left;
    if (options.history) {
        const Matrix history_residual =
            options.history->values - node_reconstruct(root, tree.delta_t, 0, old_t);
        left = fit_subtree(history_residual, 2, last_level, 0, tree.delta_t, config,
                           config.cache_all_levels);
    } else {
        // The new root now owns the band below its threshold; the old root
        // keeps only what is too fast for it.
        left = demote(tree.root);
        if (left.dmd) {
            std::vector<Index> keep;
            for (Index i = 0; i < left.dmd->rank(); ++i) {
                if (cycles_per_step(left.dmd->eigenvalues[i]) > root.rho) keep.push_back(i);
            }
            left.dmd = std::make_shared<const DmdResult>(select_modes(*left.dmd, keep));
        }
        if (!config.cache_all_levels) left.svd_cache.reset();
    }

    out.drift.frobenius_diff = tree.root.dmd ? slow_difference_norm(*root.dmd, *tree.root.dmd, old_t)
                                             : 0.0;
    out.drift.exceeded = out.drift.frobenius_diff > threshold;

    root.children.push_back(std::move(left));
    root.children.push_back(std::move(right));

    out.tree.root = std::move(root);
    out.tree.config = config;
    out.tree.total_timesteps = new_t;
    out.tree.delta_t = tree.delta_t;
    out.tree.t0 = tree.t0;
    out.tree.sensor_ids = tree.sensor_ids;
    out.tree.data_energy = tree.data_energy + new_data.values.squaredNorm();
    return out;
}

} // namespace imrdmd
