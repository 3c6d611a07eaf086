#include "imrdmd/timeseries.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace imrdmd {

SyntheticData generate_synthetic(Index p, Index t, const std::vector<SyntheticComponent>& components,
                                 double noise_sigma, double delta_t, std::uint64_t seed, double t0) {
    if (p < 1 || t < 1) throw Error("synthetic data needs p, t >= 1");
    if (!(delta_t > 0)) throw Error("delta_t must be positive");
    if (noise_sigma < 0) throw Error("noise_sigma must be non-negative");
    const double nyquist = 1.0 / (2.0 * delta_t);
    const double two_pi = 2.0 * std::numbers::pi;

    SyntheticData out;
    Matrix clean = Matrix::Zero(p, t);
    for (const auto& c : components) {
        if (c.pattern.size() != p) throw Error("component pattern length must equal p");
        if (c.quadrature.size() != 0 && c.quadrature.size() != p) {
            throw Error("component quadrature length must equal p");
        }
        if (c.frequency_hz < 0 || c.frequency_hz >= nyquist) {
            throw Error("component frequency " + std::to_string(c.frequency_hz) +
                        " Hz is not below the Nyquist rate " + std::to_string(nyquist) + " Hz");
        }
        Eigen::RowVectorXd in_phase(t);
        Eigen::RowVectorXd quadrature(t);
        for (Index k = 0; k < t; ++k) {
            const double time = static_cast<double>(k) * delta_t;
            const double envelope = c.amplitude * std::exp(c.growth * time);
            const double angle = two_pi * c.frequency_hz * time + c.phase;
            in_phase[k] = envelope * std::cos(angle);
            quadrature[k] = -envelope * std::sin(angle);
        }
        clean.noalias() += c.pattern * in_phase;
        if (c.quadrature.size() != 0) clean.noalias() += c.quadrature * quadrature;
        out.exponents.emplace_back(c.growth, two_pi * c.frequency_hz);
        if (c.frequency_hz > 0) out.exponents.emplace_back(c.growth, -two_pi * c.frequency_hz);
    }

    Matrix noisy = clean;
    if (noise_sigma > 0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, noise_sigma);
        for (Index k = 0; k < t; ++k) {
            for (Index i = 0; i < p; ++i) noisy(i, k) += normal(rng);
        }
    }

    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i) ids.push_back("s" + std::to_string(i));
    std::vector<double> ts(static_cast<std::size_t>(t));
    for (Index k = 0; k < t; ++k) ts[static_cast<std::size_t>(k)] = t0 + static_cast<double>(k) * delta_t;

    out.matrix = SensorMatrix{std::move(ids), std::move(ts), std::move(noisy), delta_t};
    out.clean = std::move(clean);
    return out;
}

} // namespace imrdmd
