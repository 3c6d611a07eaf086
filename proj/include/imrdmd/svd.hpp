#pragma once

#include "imrdmd/types.hpp"

#include <optional>
#include <span>

namespace imrdmd {

/// Thin factors u * diag(sigma) * v^T of a P x M matrix.
struct SvdFactors {
    Matrix u;     ///< P x r, orthonormal columns
    Vector sigma; ///< r values, non-increasing, >= 0
    Matrix v;     ///< M x r, orthonormal columns
    /// Column-append updates applied since the factors were last re-orthonormalized.
    Index updates = 0;

    Index rank() const { return sigma.size(); }
    Index rows() const { return u.rows(); }
    Index cols() const { return v.rows(); }

    Matrix reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }
};

/// How many singular triplets a decomposition keeps.
struct RankPolicy {
    enum class Kind { explicit_rank, svht, full };
    Kind kind = Kind::svht;
    Index rank = 0;

    static RankPolicy fixed(Index r) { return {Kind::explicit_rank, r}; }
    static RankPolicy hard_threshold() { return {Kind::svht, 0}; }
    static RankPolicy full_rank() { return {Kind::full, 0}; }

    bool operator==(const RankPolicy&) const = default;
};

/// Cubic approximation of the optimal hard-threshold coefficient for
/// unknown noise, beta = min(p,m)/max(p,m).
double svht_omega(double beta);

/// Number of singular values strictly above omega(beta) * median(sigma);
/// never less than one. When fewer than min(p,m) values are given the
/// missing tail is taken as zero.
Index svht_rank(std::span<const double> sigma, Index p, Index m);

/// Rank selected by `policy` for singular values of a p x m matrix.
Index select_rank(const Vector& sigma, Index p, Index m, const RankPolicy& policy);

/// Best rank-r factors of x. r is `rank` if given, else the SVHT rank when
/// `use_svht`, else min(P, M).
SvdFactors truncated_svd(const Matrix& x, std::optional<Index> rank = std::nullopt,
                         bool use_svht = false);

/// Factors of [u diag(sigma) v^T | new_cols] without re-decomposing the
/// existing product. Only the small (r+K) core is decomposed. The result is
/// re-truncated to `max_rank` or to the SVHT rank when requested.
SvdFactors incremental_svd_update(const SvdFactors& f, const Matrix& new_cols,
                                  std::optional<Index> max_rank = std::nullopt,
                                  bool use_svht = false);

/// ||Q^T Q - I||_F.
double orthonormality_error(const Matrix& q);

/// Makes the largest-magnitude entry of every u column positive, flipping the
/// matching v column.
void apply_sign_convention(Matrix& u, Matrix& v);

/// Re-orthonormalizes u and v through QR and a small core SVD.
SvdFactors reorthonormalize(const SvdFactors& f);

/// Updates between orthonormality checks, and the drift that triggers a rebuild.
inline constexpr Index kReorthoInterval = 50;
inline constexpr double kReorthoTolerance = 1e-8;

} // namespace imrdmd
