#pragma once

#include "imrdmd/svd.hpp"
#include "imrdmd/timeseries.hpp"

#include <optional>
#include <span>
#include <vector>

namespace imrdmd {

/// Exact DMD of a snapshot pair.
///
/// `exponents[i] = log(eigenvalues[i]) / delta_t` on the principal branch.
/// A zero eigenvalue has no logarithm; its exponent is -inf and the mode is
/// skipped by reconstruct().
struct DmdResult {
    CMatrix modes;       ///< P x r, column i is phi_i
    CVector eigenvalues; ///< discrete-time lambda_i per delta_t step
    CVector exponents;   ///< continuous-time psi_i, 1/second
    CVector amplitudes;  ///< a_i fitted against the first snapshot
    double delta_t = 1.0;

    Index rank() const { return modes.cols(); }
    Index sensors() const { return modes.rows(); }
};

/// Reduced operator used for the eigendecomposition. `exact` takes
/// U^T Y V Sigma^-1 as is. `forward_backward` combines it with the operator of
/// the time-reversed pair, (A_f A_b^-1)^(1/2), which cancels the shrinkage of
/// eigenvalues that noise in X causes; it falls back to `exact` when the
/// backward operator is singular.
enum class DmdOperator { exact, forward_backward };

/// Fits modes, eigenvalues and amplitudes of Y ~ A X without forming A.
/// SVHT and full-rank policies stop at the numerical rank of X; an explicit
/// rank past it throws RankDeficientError.
DmdResult fit_dmd(const SnapshotPair& pair, double delta_t, const RankPolicy& policy,
                  DmdOperator op = DmdOperator::exact);

/// Same fit driven by cached factors of X = [x_0 .. x_{n-2}] (untruncated),
/// the final snapshot x_{n-1} and the first snapshot x_0. Y is never
/// materialized: U^T Y and Y V are assembled from the factors.
DmdResult fit_dmd_from_factors(const SvdFactors& x_factors, const Vector& last_snapshot,
                               const Vector& first_snapshot, double delta_t,
                               const RankPolicy& policy, DmdOperator op = DmdOperator::exact);

/// Least-squares a with modes * a ~ x0.
CVector amplitudes(const CMatrix& modes, const Vector& x0);

/// Real part of sum_{i in mask} phi_i exp(psi_i t) a_i at each time (seconds).
Matrix reconstruct(const DmdResult& r, std::span<const double> times,
                   const std::optional<std::vector<Index>>& mask = std::nullopt);

/// Reconstruction at t = k * delta_t for k = 0..steps-1.
Matrix reconstruct_steps(const DmdResult& r, Index steps,
                         const std::optional<std::vector<Index>>& mask = std::nullopt);

/// Oscillation rate of a discrete eigenvalue in cycles per step.
double cycles_per_step(Complex eigenvalue);

/// Indices whose eigenvalue oscillates at most `rho` cycles per step.
std::vector<Index> slow_mode_indices(const DmdResult& r, double rho);

/// Keeps only the listed modes, in the given order.
DmdResult select_modes(const DmdResult& r, std::span<const Index> indices);

/// Re-expresses a result fitted at `stride * delta_t` in `delta_t` units.
DmdResult rescale_time(const DmdResult& r, double delta_t);

/// True for the zero-eigenvalue sentinel.
bool is_nilpotent(Complex exponent);

} // namespace imrdmd
