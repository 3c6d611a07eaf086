#pragma once

#include "imrdmd/mrdmd.hpp"

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace imrdmd {

struct SpectrumPoint {
    std::string node_path;
    Index mode_index = 0;
    double frequency_hz = 0.0;
    double power = 0.0;
    double growth = 0.0; ///< real part of psi, 1/second
    int level = 1;
};

/// |imag(psi)| / 2 pi.
double mode_frequency(Complex psi);

/// Squared 2-norm of a mode.
double mode_power(const CVector& phi);

/// Mode i scaled by its amplitude. Eigenvectors have arbitrary scale, so
/// spectrum power and sensor magnitudes are taken on this form.
CVector scaled_mode(const DmdResult& r, Index i);

/// One point per retained mode of every node, depth-first, by mode index.
/// Power is mode_power(scaled_mode(...)).
std::vector<SpectrumPoint> spectrum_of(const MrDmdTree& tree);

/// Minimum power a mode needs to be selected. A quantile floor q keeps modes
/// at or above the q-quantile of all spectrum powers (0.9 keeps the top 10%).
struct PowerFloor {
    enum class Kind { absolute, quantile };
    Kind kind = Kind::absolute;
    double value = 0.0;

    static PowerFloor absolute_floor(double v) { return {Kind::absolute, v}; }
    static PowerFloor quantile_floor(double q) { return {Kind::quantile, q}; }
};

struct FilterResult {
    ModeSelection selection;
    double power_threshold = 0.0;
    bool empty_warning = false;
};

FilterResult filter_modes(const MrDmdTree& tree, double f_min_hz,
                          double f_max_hz = std::numeric_limits<double>::infinity(),
                          PowerFloor floor = {});

/// CSV with columns level,node_path,mode_index,frequency_hz,power,growth.
void write_spectrum_csv(const std::vector<SpectrumPoint>& points, const std::filesystem::path& path);
std::vector<SpectrumPoint> read_spectrum_csv(const std::filesystem::path& path);

/// Power-versus-frequency scatter as a standalone SVG document.
std::string spectrum_svg(const std::vector<SpectrumPoint>& points);

} // namespace imrdmd
