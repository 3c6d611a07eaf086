#include "imrdmd/dmd.hpp"
#include "imrdmd/timeseries.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace imrdmd;

namespace {

// Largest distance from each planted eigenvalue to its nearest fitted one.
double eigen_error(const CVector& fitted, const std::vector<Complex>& planted) {
    double worst = 0.0;
    for (const auto& p : planted) {
        double best = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < fitted.size(); ++i) best = std::min(best, std::abs(fitted[i] - p));
        worst = std::max(worst, best);
    }
    return worst;
}

} // namespace

TEST(Dmd, PlantedSystemExact) {
    const auto sys = oracle::planted_system(30, 200, {0.99}, {{0.995, 0.2}, {1.0, 0.05}}, 4);
    const auto r = fit_dmd(shift_pair(sys.snapshots), 1.0, RankPolicy::fixed(5));
    EXPECT_LT(eigen_error(r.eigenvalues, sys.eigenvalues), 1e-8);
    const Matrix rec = reconstruct_steps(r, 200);
    EXPECT_LT((rec - sys.snapshots).norm() / sys.snapshots.norm(), 1e-6);
}

TEST(Dmd, SvhtFindsPlantedRankWithoutNoise) {
    const auto sys = oracle::planted_system(20, 100, {}, {{1.0, 0.3}, {0.98, 0.9}}, 5);
    const auto r = fit_dmd(shift_pair(sys.snapshots), 0.5, RankPolicy::hard_threshold());
    EXPECT_EQ(r.rank(), 4);
    EXPECT_LT(eigen_error(r.eigenvalues, sys.eigenvalues), 1e-8);
}

TEST(Dmd, ExponentsAreLogOverDelta) {
    const auto sys = oracle::planted_system(10, 60, {}, {{1.0, 0.25}}, 6);
    const double dt = 0.1;
    const auto r = fit_dmd(shift_pair(sys.snapshots), dt, RankPolicy::fixed(2));
    for (Index i = 0; i < r.rank(); ++i) {
        EXPECT_NEAR(std::abs(r.exponents[i].imag()), 0.25 / dt, 1e-8);
        EXPECT_NEAR(r.exponents[i].real(), 0.0, 1e-8);
    }
}

TEST(Dmd, FactorRouteMatchesDirectFit) {
    const auto sys = oracle::planted_system(15, 80, {0.97}, {{0.999, 0.1}}, 7);
    const auto pair = shift_pair(sys.snapshots);
    const auto direct = fit_dmd(pair, 2.0, RankPolicy::fixed(3));
    const auto f = truncated_svd(pair.x);
    const auto via = fit_dmd_from_factors(f, sys.snapshots.col(79), sys.snapshots.col(0), 2.0, RankPolicy::fixed(3));
    EXPECT_LT(eigen_error(via.eigenvalues, std::vector<Complex>(direct.eigenvalues.data(),
                                                                direct.eigenvalues.data() + 3)),
              1e-10);
    EXPECT_LT((reconstruct_steps(via, 80) - reconstruct_steps(direct, 80)).norm(), 1e-8 * sys.snapshots.norm());
}

TEST(Dmd, RankDeficientRaises) {
    const auto sys = oracle::planted_system(10, 40, {0.9}, {}, 8);
    EXPECT_THROW(fit_dmd(shift_pair(sys.snapshots), 1.0, RankPolicy::fixed(3)), RankDeficientError);
}

TEST(Dmd, BadInputs) {
    SnapshotPair p{Matrix::Ones(3, 4), Matrix::Ones(3, 5)};
    EXPECT_THROW(fit_dmd(p, 1.0, RankPolicy::full_rank()), Error);
    SnapshotPair q{Matrix::Random(3, 4), Matrix::Random(3, 4)};
    EXPECT_THROW(fit_dmd(q, 0.0, RankPolicy::full_rank()), Error);
    EXPECT_THROW(fit_dmd(q, 1.0, RankPolicy::fixed(4)), Error);
}

TEST(Dmd, NilpotentModeHasNoExponent) {
    // 2 e1 -> e2 -> 0: the rank-1 operator on span(e1) is zero
    Matrix snaps = Matrix::Zero(3, 4);
    snaps(0, 0) = 2.0;
    snaps(1, 1) = 1.0;
    const auto r = fit_dmd(shift_pair(snaps), 1.0, RankPolicy::fixed(1));
    ASSERT_EQ(r.rank(), 1);
    EXPECT_TRUE(is_nilpotent(r.exponents[0]));
    EXPECT_TRUE(reconstruct_steps(r, 4).allFinite());
    EXPECT_TRUE(slow_mode_indices(r, 1.0).empty());
}

TEST(Dmd, AmplitudesLeastSquares) {
    CMatrix modes(3, 2);
    modes << 1, 0, 0, 1, 0, 0;
    Vector x0(3);
    x0 << 2, -3, 5;
    const auto a = amplitudes(modes, x0);
    EXPECT_NEAR(std::abs(a[0] - Complex(2, 0)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(a[1] - Complex(-3, 0)), 0.0, 1e-14);
}

TEST(Dmd, CyclesPerStepAndSelection) {
    EXPECT_NEAR(cycles_per_step(std::polar(1.0, 2.0 * std::numbers::pi * 0.1)), 0.1, 1e-15);
    EXPECT_NEAR(cycles_per_step(std::polar(1.0, -2.0 * std::numbers::pi * 0.1)), 0.1, 1e-15);
    EXPECT_EQ(cycles_per_step(Complex(-1.0, 0.0)), 0.5);
    const auto sys = oracle::planted_system(12, 100, {1.0}, {{1.0, 0.1}, {1.0, 1.0}}, 9);
    const auto r = fit_dmd(shift_pair(sys.snapshots), 1.0, RankPolicy::fixed(5));
    const auto slow = slow_mode_indices(r, 0.1 / (2 * std::numbers::pi) + 1e-6);
    EXPECT_EQ(slow.size(), 3u);
    const auto sub = select_modes(r, slow);
    EXPECT_EQ(sub.rank(), 3);
    const std::vector<Index> mask{slow.begin(), slow.end()};
    EXPECT_LT((reconstruct_steps(sub, 50) - reconstruct_steps(r, 50, mask)).norm(), 1e-10);
}

TEST(Dmd, RescaleTime) {
    const auto sys = oracle::planted_system(8, 60, {}, {{1.0, 0.4}}, 10);
    // every 2nd snapshot, fitted at stride 2
    Matrix sub(8, 30);
    for (Index j = 0; j < 30; ++j) sub.col(j) = sys.snapshots.col(2 * j);
    const auto coarse = fit_dmd(shift_pair(sub), 2.0, RankPolicy::fixed(2));
    const auto fine = rescale_time(coarse, 1.0);
    EXPECT_LT(eigen_error(fine.eigenvalues, sys.eigenvalues), 1e-8);
    EXPECT_LT((reconstruct_steps(fine, 60) - sys.snapshots).norm() / sys.snapshots.norm(), 1e-6);
}

TEST(Dmd, ForwardBackwardExactWithoutNoise) {
    const auto sys = oracle::planted_system(20, 120, {0.97}, {{0.999, 0.1}, {1.0, 0.4}}, 9);
    const auto pair = shift_pair(sys.snapshots);
    const auto fb = fit_dmd(pair, 1.0, RankPolicy::fixed(5), DmdOperator::forward_backward);
    EXPECT_LT(eigen_error(fb.eigenvalues, sys.eigenvalues), 1e-7);
    const auto f = truncated_svd(pair.x);
    const auto via = fit_dmd_from_factors(f, sys.snapshots.col(119), sys.snapshots.col(0), 1.0,
                                          RankPolicy::fixed(5), DmdOperator::forward_backward);
    EXPECT_LT(eigen_error(via.eigenvalues, sys.eigenvalues), 1e-7);
}

TEST(Dmd, ForwardBackwardReducesNoiseDamping) {
    // an undamped oscillation: exact DMD pulls |lambda| inside the unit circle under noise
    const auto sys = oracle::planted_system(40, 400, {}, {{1.0, 0.05}}, 10);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix noisy = sys.snapshots;
    const double sigma = 0.3 * sys.snapshots.norm() / std::sqrt(static_cast<double>(noisy.size()));
    for (Index k = 0; k < noisy.size(); ++k) noisy.data()[k] += sigma * gauss(rng);
    const auto pair = shift_pair(noisy);
    const auto exact = fit_dmd(pair, 1.0, RankPolicy::fixed(2));
    const auto fb = fit_dmd(pair, 1.0, RankPolicy::fixed(2), DmdOperator::forward_backward);
    const double exact_bias = std::abs(1.0 - std::abs(exact.eigenvalues[0]));
    const double fb_bias = std::abs(1.0 - std::abs(fb.eigenvalues[0]));
    EXPECT_LT(fb_bias, 0.5 * exact_bias);
}

TEST(Dmd, ForwardBackwardFallsBackWhenSingular) {
    Matrix snaps = Matrix::Zero(3, 4);
    snaps(0, 0) = 2.0;
    snaps(1, 1) = 1.0;
    const auto exact = fit_dmd(shift_pair(snaps), 1.0, RankPolicy::fixed(2));
    const auto fb = fit_dmd(shift_pair(snaps), 1.0, RankPolicy::fixed(2), DmdOperator::forward_backward);
    EXPECT_LT((exact.eigenvalues - fb.eigenvalues).norm(), 1e-12);
}
