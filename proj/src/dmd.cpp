#include "imrdmd/dmd.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <optional>

namespace imrdmd {
namespace {

constexpr double kNilpotentTolerance = 1e-14;

// Threshold and full-rank policies stop at the numerical rank of X.
Index policy_rank(const Vector& sigma, Index p, Index m, const RankPolicy& policy) {
    const Index r = select_rank(sigma, p, m, policy);
    if (policy.kind == RankPolicy::Kind::explicit_rank || sigma.size() == 0) return r;
    const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(p, m)) * sigma[0];
    Index numerical = 0;
    while (numerical < r && sigma[numerical] > tol) ++numerical;
    return std::max<Index>(1, numerical);
}

void check_retained(const Vector& sigma, Index r, Index p, Index m) {
    const double tol = std::numeric_limits<double>::epsilon() *
                       static_cast<double>(std::max(p, m)) * (sigma.size() ? sigma[0] : 0.0);
    if (sigma.size() == 0 || sigma[0] <= 0.0 || sigma[r - 1] <= tol) {
        throw RankDeficientError("rank-deficient X within truncation (rank " + std::to_string(r) +
                                 ")");
    }
}

// Debiased operator (A_f A_b^-1)^(1/2) from the forward operator `reduced`
// (U^T Y V Sigma^-1), x_tilde = Sigma V^T and y_tilde = U^T Y. Empty when the
// backward operator is singular, as with nilpotent dynamics.
std::optional<Matrix> backward_product(const Matrix& reduced, const Matrix& x_tilde, const Matrix& y_tilde) {
    const Index r = reduced.rows();
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(y_tilde.transpose());
    cod.setThreshold(1e-10);
    if (cod.rank() < r) return std::nullopt;
    const Matrix backward = cod.solve(x_tilde.transpose()).transpose();
    Eigen::FullPivLU<Matrix> lu(backward);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) return std::nullopt;
    return Matrix(reduced * lu.inverse());
}

// Shared tail of both fitting routes: `projected` is Y V Sigma^-1 (P x r) and
// `reduced` is U^T Y V Sigma^-1 (r x r). With a forward-backward product the
// eigenvectors come from it and each eigenvalue is the square root on the
// branch nearest the forward operator's Rayleigh quotient.
DmdResult finish(const Matrix& projected, const Matrix& reduced, const std::optional<Matrix>& fb,
                 const Vector& x0, double delta_t) {
    Eigen::EigenSolver<Matrix> eig(fb ? *fb : reduced, true);
    if (eig.info() != Eigen::Success) throw Error("eigendecomposition of reduced operator failed");

    DmdResult out;
    out.delta_t = delta_t;
    out.eigenvalues = eig.eigenvalues();
    const CMatrix w = eig.eigenvectors();
    if (fb) {
        const CMatrix forward = reduced.cast<Complex>();
        for (Index i = 0; i < w.cols(); ++i) {
            const Complex guess = w.col(i).dot(forward * w.col(i)) / w.col(i).squaredNorm();
            const Complex root = std::sqrt(out.eigenvalues[i]);
            out.eigenvalues[i] = std::abs(root - guess) <= std::abs(-root - guess) ? root : -root;
        }
    }
    out.modes = projected.cast<Complex>() * w;

    const double largest = out.eigenvalues.size() ? out.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
    const double floor = kNilpotentTolerance * std::max(1.0, largest);
    out.exponents.resize(out.eigenvalues.size());
    for (Index i = 0; i < out.eigenvalues.size(); ++i) {
        const Complex lambda = out.eigenvalues[i];
        if (std::abs(lambda) <= floor) {
            out.exponents[i] = Complex(-std::numeric_limits<double>::infinity(), 0.0);
        } else {
            out.exponents[i] = std::log(lambda) / delta_t;
        }
    }
    out.amplitudes = amplitudes(out.modes, x0);
    return out;
}

} // namespace

bool is_nilpotent(Complex exponent) {
    return std::isinf(exponent.real()) && exponent.real() < 0;
}

DmdResult fit_dmd(const SnapshotPair& pair, double delta_t, const RankPolicy& policy, DmdOperator op) {
    if (pair.x.cols() < 1) throw Error("fit_dmd: snapshot pair has no columns");
    if (pair.x.rows() != pair.y.rows() || pair.x.cols() != pair.y.cols()) {
        throw Error("fit_dmd: X and Y shapes differ");
    }
    if (!(delta_t > 0)) throw Error("fit_dmd: delta_t must be positive");

    const SvdFactors full = truncated_svd(pair.x);
    const Index r = policy_rank(full.sigma, pair.x.rows(), pair.x.cols(), policy);
    check_retained(full.sigma, r, pair.x.rows(), pair.x.cols());

    const auto u = full.u.leftCols(r);
    const Vector inv_sigma = full.sigma.head(r).cwiseInverse();
    const Matrix projected = pair.y * full.v.leftCols(r) * inv_sigma.asDiagonal();
    const Matrix reduced = u.transpose() * projected;
    std::optional<Matrix> fb;
    if (op == DmdOperator::forward_backward) {
        const Matrix x_tilde = full.sigma.head(r).asDiagonal() * full.v.leftCols(r).transpose();
        fb = backward_product(reduced, x_tilde, u.transpose() * pair.y);
    }
    return finish(projected, reduced, fb, pair.x.col(0), delta_t);
}

DmdResult fit_dmd_from_factors(const SvdFactors& x_factors, const Vector& last_snapshot,
                               const Vector& first_snapshot, double delta_t,
                               const RankPolicy& policy, DmdOperator op) {
    const Index p = x_factors.rows();
    const Index n = x_factors.cols();
    if (n < 1 || x_factors.rank() < 1) throw Error("fit_dmd_from_factors: empty factors");
    if (last_snapshot.size() != p || first_snapshot.size() != p) {
        throw Error("fit_dmd_from_factors: snapshot length does not match factors");
    }
    if (!(delta_t > 0)) throw Error("fit_dmd_from_factors: delta_t must be positive");

    const Index r = policy_rank(x_factors.sigma, p, n, policy);
    check_retained(x_factors.sigma, r, p, n);

    const auto v_r = x_factors.v.leftCols(r);
    // Y V_r = X[:,1:] V_r[0:n-1,:] + x_last V_r[n-1,:], with X[:,1:] = U S V[1:,:]^T.
    Matrix yv = last_snapshot * v_r.row(n - 1);
    if (n > 1) {
        const Matrix inner = x_factors.sigma.asDiagonal() *
                             (x_factors.v.bottomRows(n - 1).transpose() * v_r.topRows(n - 1));
        yv.noalias() += x_factors.u * inner;
    }
    const Vector inv_sigma = x_factors.sigma.head(r).cwiseInverse();
    const Matrix projected = yv * inv_sigma.asDiagonal();
    const Matrix reduced = x_factors.u.leftCols(r).transpose() * projected;
    std::optional<Matrix> fb;
    if (op == DmdOperator::forward_backward) {
        // U_r^T X = Sigma_r V_r^T, and U_r^T Y is the same shifted by one column plus U_r^T x_last.
        const Matrix x_tilde = x_factors.sigma.head(r).asDiagonal() * v_r.transpose();
        Matrix y_tilde(r, n);
        if (n > 1) y_tilde.leftCols(n - 1) = x_tilde.rightCols(n - 1);
        y_tilde.col(n - 1) = x_factors.u.leftCols(r).transpose() * last_snapshot;
        fb = backward_product(reduced, x_tilde, y_tilde);
    }
    return finish(projected, reduced, fb, first_snapshot, delta_t);
}

CVector amplitudes(const CMatrix& modes, const Vector& x0) {
    if (modes.rows() != x0.size()) throw Error("amplitudes: mode rows do not match x0");
    if (modes.cols() == 0) return CVector(0);
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(modes);
    return cod.solve(x0.cast<Complex>());
}

Matrix reconstruct(const DmdResult& r, std::span<const double> times,
                   const std::optional<std::vector<Index>>& mask) {
    std::vector<Index> idx;
    if (mask) {
        for (Index i : *mask) {
            if (i < 0 || i >= r.rank()) throw Error("reconstruct: mode index out of range");
        }
        idx = *mask;
    } else {
        idx.resize(static_cast<std::size_t>(r.rank()));
        std::iota(idx.begin(), idx.end(), Index{0});
    }
    std::erase_if(idx, [&](Index i) { return is_nilpotent(r.exponents[i]); });

    const auto n = static_cast<Index>(times.size());
    const auto m = static_cast<Index>(idx.size());
    if (m == 0) return Matrix::Zero(r.sensors(), n);

    CMatrix weighted(r.sensors(), m);
    CMatrix temporal(m, n);
    for (Index j = 0; j < m; ++j) {
        const Index i = idx[static_cast<std::size_t>(j)];
        weighted.col(j) = r.modes.col(i) * r.amplitudes[i];
        for (Index k = 0; k < n; ++k) temporal(j, k) = std::exp(r.exponents[i] * times[k]);
    }
    Matrix out = weighted.real() * temporal.real();
    out.noalias() -= weighted.imag() * temporal.imag();
    return out;
}

Matrix reconstruct_steps(const DmdResult& r, Index steps, const std::optional<std::vector<Index>>& mask) {
    std::vector<double> times(static_cast<std::size_t>(steps));
    for (Index k = 0; k < steps; ++k) times[static_cast<std::size_t>(k)] = static_cast<double>(k) * r.delta_t;
    return reconstruct(r, times, mask);
}

double cycles_per_step(Complex eigenvalue) {
    if (eigenvalue == Complex(0.0, 0.0)) return 0.0;
    return std::abs(std::arg(eigenvalue)) / (2.0 * std::numbers::pi);
}

std::vector<Index> slow_mode_indices(const DmdResult& r, double rho) {
    if (rho < 0) throw Error("slow_mode_indices: rho must be non-negative");
    std::vector<Index> out;
    for (Index i = 0; i < r.rank(); ++i) {
        if (i < r.exponents.size() && is_nilpotent(r.exponents[i])) continue;
        if (cycles_per_step(r.eigenvalues[i]) <= rho) out.push_back(i);
    }
    return out;
}

DmdResult select_modes(const DmdResult& r, std::span<const Index> indices) {
    DmdResult out;
    out.delta_t = r.delta_t;
    const auto m = static_cast<Index>(indices.size());
    out.modes.resize(r.sensors(), m);
    out.eigenvalues.resize(m);
    out.exponents.resize(m);
    out.amplitudes.resize(m);
    for (Index j = 0; j < m; ++j) {
        const Index i = indices[static_cast<std::size_t>(j)];
        if (i < 0 || i >= r.rank()) throw Error("select_modes: index out of range");
        out.modes.col(j) = r.modes.col(i);
        out.eigenvalues[j] = r.eigenvalues[i];
        out.exponents[j] = r.exponents[i];
        out.amplitudes[j] = r.amplitudes[i];
    }
    return out;
}

DmdResult rescale_time(const DmdResult& r, double delta_t) {
    DmdResult out = r;
    out.delta_t = delta_t;
    for (Index i = 0; i < out.rank(); ++i) {
        out.eigenvalues[i] = is_nilpotent(out.exponents[i]) ? Complex(0.0, 0.0)
                                                            : std::exp(out.exponents[i] * delta_t);
    }
    return out;
}

} // namespace imrdmd
