#pragma once

#include "imrdmd/mrdmd.hpp"

#include <optional>

namespace imrdmd {

/// Change of the level-1 slow reconstruction caused by an incremental update.
struct DriftReport {
    double frobenius_diff = 0.0;
    double threshold = 0.0;
    bool exceeded = false;
    Index old_t_start = 0;
    Index old_t_end = 0;
    Index compared_start = 0;
    Index compared_end = 0;
};

struct PartialFitOptions {
    /// Drift threshold; defaults to 1% of the Frobenius norm of the data fitted so far.
    std::optional<double> threshold;
    /// Full data over the previous timeline. When given, the left subtree is
    /// refit against the new level-1 residual instead of being demoted.
    const SensorMatrix* history = nullptr;
};

struct PartialFitResult {
    MrDmdTree tree;
    DriftReport drift;
};

/// Extends level 1 with `new_data` through an incremental SVD update, demotes
/// the previous tree under a split at the old boundary and fits a fresh branch
/// over the new columns. The input tree is left untouched.
PartialFitResult partial_fit(const MrDmdTree& tree, const SensorMatrix& new_data,
                             const PartialFitOptions& options = {});

DriftReport drift_check(const Matrix& old_recon, const Matrix& new_recon, double threshold);

/// ||recon - data||_F.
double reconstruction_gap(const Matrix& recon, const Matrix& data);

/// ||Re(recon_a - recon_b)||_F over steps 0..steps-1, in closed form (no
/// P x steps matrix is formed).
double slow_difference_norm(const DmdResult& a, const DmdResult& b, Index steps);

/// Copy of `node` with every level raised by `by`; payloads are shared.
MrDmdNode demote(const MrDmdNode& node, int by = 1);

} // namespace imrdmd
