#include "imrdmd/svd.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace imrdmd {

double svht_omega(double beta) {
    return 0.56 * beta * beta * beta - 0.95 * beta * beta + 1.82 * beta + 1.43;
}

Index svht_rank(std::span<const double> sigma, Index p, Index m) {
    if (sigma.empty()) throw Error("svht_rank: empty singular value list");
    if (p < 1 || m < 1) throw Error("svht_rank: p and m must be positive");
    const double beta = static_cast<double>(std::min(p, m)) / static_cast<double>(std::max(p, m));
    // Untracked singular values (factors narrower than min(p,m)) count as zeros.
    std::vector<double> sorted(sigma.begin(), sigma.end());
    sorted.resize(std::max(sorted.size(), static_cast<std::size_t>(std::min(p, m))), 0.0);
    const std::size_t n = sorted.size();
    std::sort(sorted.begin(), sorted.end());
    const double median =
        n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const double tau = svht_omega(beta) * median;
    const auto above = std::count_if(sigma.begin(), sigma.end(), [tau](double s) { return s > tau; });
    return std::max<Index>(1, static_cast<Index>(above));
}

Index select_rank(const Vector& sigma, Index p, Index m, const RankPolicy& policy) {
    const Index available = sigma.size();
    switch (policy.kind) {
    case RankPolicy::Kind::explicit_rank:
        if (policy.rank < 1 || policy.rank > available) {
            throw Error("requested rank " + std::to_string(policy.rank) + " outside [1," +
                        std::to_string(available) + "]");
        }
        return policy.rank;
    case RankPolicy::Kind::svht:
        return std::min(available, svht_rank({sigma.data(), static_cast<std::size_t>(available)}, p, m));
    case RankPolicy::Kind::full:
        break;
    }
    return available;
}

void apply_sign_convention(Matrix& u, Matrix& v) {
    for (Index j = 0; j < u.cols(); ++j) {
        Index arg = 0;
        u.col(j).cwiseAbs().maxCoeff(&arg);
        if (u(arg, j) < 0) {
            u.col(j) *= -1.0;
            if (j < v.cols()) v.col(j) *= -1.0;
        }
    }
}

double orthonormality_error(const Matrix& q) {
    return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).norm();
}

namespace {

SvdFactors truncate(SvdFactors f, Index r) {
    if (r >= f.rank()) return f;
    f.u.conservativeResize(Eigen::NoChange, r);
    f.v.conservativeResize(Eigen::NoChange, r);
    f.sigma.conservativeResize(r);
    return f;
}

} // namespace

SvdFactors truncated_svd(const Matrix& x, std::optional<Index> rank, bool use_svht) {
    if (x.rows() < 1 || x.cols() < 1) throw Error("truncated_svd: empty matrix");
    if (!x.allFinite()) throw Error("truncated_svd: non-finite entries");
    const Index full = std::min(x.rows(), x.cols());
    if (rank && (*rank < 1 || *rank > full)) {
        throw Error("truncated_svd: rank " + std::to_string(*rank) + " outside [1," +
                    std::to_string(full) + "]");
    }

    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdFactors f{svd.matrixU(), svd.singularValues(), svd.matrixV(), 0};
    apply_sign_convention(f.u, f.v);

    Index r = full;
    if (rank) {
        r = *rank;
    } else if (use_svht) {
        r = svht_rank({f.sigma.data(), static_cast<std::size_t>(f.sigma.size())}, x.rows(), x.cols());
    }
    return truncate(std::move(f), r);
}

SvdFactors reorthonormalize(const SvdFactors& f) {
    Eigen::HouseholderQR<Matrix> qu(f.u);
    Eigen::HouseholderQR<Matrix> qv(f.v);
    const Index r = f.rank();
    Matrix qu_thin = qu.householderQ() * Matrix::Identity(f.u.rows(), r);
    Matrix qv_thin = qv.householderQ() * Matrix::Identity(f.v.rows(), r);
    Matrix ru = qu.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    Matrix rv = qv.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    Matrix core = ru * f.sigma.asDiagonal() * rv.transpose();
    Eigen::JacobiSVD<Matrix> svd(core, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SvdFactors out{qu_thin * svd.matrixU(), svd.singularValues(), qv_thin * svd.matrixV(), 0};
    apply_sign_convention(out.u, out.v);
    return out;
}

SvdFactors incremental_svd_update(const SvdFactors& f, const Matrix& new_cols,
                                  std::optional<Index> max_rank, bool use_svht) {
    const Index p = f.rows();
    if (new_cols.rows() != p) {
        throw Error("incremental_svd_update: new columns have " + std::to_string(new_cols.rows()) +
                    " rows, factors have " + std::to_string(p));
    }
    const Index k = new_cols.cols();
    if (k == 0) return f;
    if (!new_cols.allFinite()) throw Error("incremental_svd_update: non-finite entries");
    const Index r = f.rank();
    const Index m = f.cols();

    // Project onto span(u) twice (classical Gram-Schmidt with one re-orthogonalization).
    Matrix proj = f.u.transpose() * new_cols;
    Matrix resid = new_cols - f.u * proj;
    Matrix proj2 = f.u.transpose() * resid;
    resid.noalias() -= f.u * proj2;
    proj += proj2;

    // Orthonormal basis of the residual, dropping numerically null directions.
    Eigen::ColPivHouseholderQR<Matrix> qr(resid);
    const double scale = std::max(f.sigma.size() > 0 ? f.sigma[0] : 0.0, new_cols.norm());
    const double tol = 1e-13 * std::max<double>(static_cast<double>(std::max(p, k)), 1.0) * scale;
    const Matrix& packed = qr.matrixQR();
    Index fresh = 0;
    const Index diag = std::min(packed.rows(), packed.cols());
    while (fresh < diag && std::abs(packed(fresh, fresh)) > tol) ++fresh;
    fresh = std::min(fresh, p - r);

    Matrix basis;
    Matrix resid_coeff;
    if (fresh > 0) {
        basis = qr.householderQ() * Matrix::Identity(p, fresh);
        Matrix upper = packed.topRows(fresh).triangularView<Eigen::Upper>();
        resid_coeff = upper * qr.colsPermutation().transpose();
    }

    // Core [[diag(sigma), proj], [0, resid_coeff]] is (r+fresh) x (r+k).
    Matrix core = Matrix::Zero(r + fresh, r + k);
    core.topLeftCorner(r, r) = f.sigma.asDiagonal();
    core.topRightCorner(r, k) = proj;
    if (fresh > 0) core.bottomRightCorner(fresh, k) = resid_coeff;

    Eigen::JacobiSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Matrix& cu = svd.matrixU();
    const Matrix& cv = svd.matrixV();

    SvdFactors out;
    out.sigma = svd.singularValues();
    out.u = f.u * cu.topRows(r);
    if (fresh > 0) out.u.noalias() += basis * cu.bottomRows(fresh);
    out.v.resize(m + k, cv.cols());
    out.v.topRows(m) = f.v * cv.topRows(r);
    out.v.bottomRows(k) = cv.bottomRows(k);
    out.updates = f.updates + 1;
    apply_sign_convention(out.u, out.v);

    if (out.updates % kReorthoInterval == 0 &&
        std::max(orthonormality_error(out.u), orthonormality_error(out.v)) > kReorthoTolerance) {
        const Index count = out.updates;
        out = reorthonormalize(out);
        out.updates = count;
    }

    Index keep = out.rank();
    if (max_rank) keep = std::min(keep, std::max<Index>(1, *max_rank));
    if (use_svht) {
        keep = std::min(keep, svht_rank({out.sigma.data(), static_cast<std::size_t>(out.sigma.size())},
                                        p, m + k));
    }
    return truncate(std::move(out), keep);
}

} // namespace imrdmd
