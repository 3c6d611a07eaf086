#include "imrdmd/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace imrdmd {
namespace {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace

double mode_frequency(Complex psi) { return std::abs(psi.imag()) / (2.0 * std::numbers::pi); }

double mode_power(const CVector& phi) { return phi.squaredNorm(); }

CVector scaled_mode(const DmdResult& r, Index i) {
    if (i < 0 || i >= r.rank()) throw Error("scaled_mode: index out of range");
    return r.modes.col(i) * r.amplitudes[i];
}

std::vector<SpectrumPoint> spectrum_of(const MrDmdTree& tree) {
    std::vector<SpectrumPoint> out;
    visit_nodes(tree, [&](const MrDmdNode& node, const std::string& path) {
        if (!node.dmd) return;
        const DmdResult& r = *node.dmd;
        for (Index i = 0; i < r.rank(); ++i) {
            if (is_nilpotent(r.exponents[i])) continue;
            SpectrumPoint p;
            p.node_path = path;
            p.mode_index = i;
            p.frequency_hz = mode_frequency(r.exponents[i]);
            p.power = mode_power(scaled_mode(r, i));
            p.growth = r.exponents[i].real();
            p.level = node.level;
            out.push_back(std::move(p));
        }
    });
    return out;
}

FilterResult filter_modes(const MrDmdTree& tree, double f_min_hz, double f_max_hz, PowerFloor floor) {
    if (!(f_min_hz >= 0) || !(f_max_hz >= f_min_hz)) {
        throw Error("filter_modes: need 0 <= f_min <= f_max");
    }
    const auto points = spectrum_of(tree);
    FilterResult out;
    if (floor.kind == PowerFloor::Kind::quantile) {
        if (floor.value < 0 || floor.value > 1) throw Error("filter_modes: quantile must lie in [0,1]");
        std::vector<double> powers;
        powers.reserve(points.size());
        for (const auto& p : points) powers.push_back(p.power);
        std::sort(powers.begin(), powers.end());
        if (!powers.empty()) {
            const double pos = floor.value * static_cast<double>(powers.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, powers.size() - 1);
            out.power_threshold = powers[lo] + (pos - static_cast<double>(lo)) * (powers[hi] - powers[lo]);
        }
    } else {
        out.power_threshold = floor.value;
    }
    for (const auto& p : points) {
        if (p.frequency_hz >= f_min_hz && p.frequency_hz <= f_max_hz && p.power >= out.power_threshold) {
            out.selection.insert(ModeKey{p.node_path, p.mode_index});
        }
    }
    out.empty_warning = out.selection.empty();
    return out;
}

void write_spectrum_csv(const std::vector<SpectrumPoint>& points, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "level,node_path,mode_index,frequency_hz,power,growth\n";
    for (const auto& p : points) {
        out << p.level << ',' << p.node_path << ',' << p.mode_index << ',' << format_double(p.frequency_hz)
            << ',' << format_double(p.power) << ',' << format_double(p.growth) << '\n';
    }
    if (!out) throw Error("write failed for " + path.string());
}

std::vector<SpectrumPoint> read_spectrum_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<SpectrumPoint> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 6) throw Error("spectrum csv: malformed line '" + line + "'");
        SpectrumPoint p;
        p.level = std::stoi(cells[0]);
        p.node_path = cells[1];
        p.mode_index = std::stol(cells[2]);
        p.frequency_hz = std::stod(cells[3]);
        p.power = std::stod(cells[4]);
        p.growth = std::stod(cells[5]);
        out.push_back(std::move(p));
    }
    return out;
}

std::string spectrum_svg(const std::vector<SpectrumPoint>& points) {
    constexpr double width = 640, height = 400, margin = 56;
    double f_max = 0, p_max = 0;
    int level_max = 1;
    for (const auto& p : points) {
        f_max = std::max(f_max, p.frequency_hz);
        p_max = std::max(p_max, p.power);
        level_max = std::max(level_max, p.level);
    }
    if (f_max <= 0) f_max = 1;
    if (p_max <= 0) p_max = 1;
    const double plot_w = width - 2 * margin;
    const double plot_h = height - 2 * margin;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 16
        << "\" text-anchor=\"middle\" font-size=\"13\">frequency (Hz), max " << format_double(f_max)
        << "</text>\n";
    svg << "<text x=\"16\" y=\"" << height / 2 << "\" transform=\"rotate(-90 16 " << height / 2
        << ")\" text-anchor=\"middle\" font-size=\"13\">power, max " << format_double(p_max) << "</text>\n";
    for (const auto& p : points) {
        const double x = margin + plot_w * p.frequency_hz / f_max;
        const double y = height - margin - plot_h * p.power / p_max;
        const int hue = 240 - 200 * (p.level - 1) / std::max(1, level_max - 1);
        svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"hsl(" << hue
            << ",70%,45%)\"><title>level " << p.level << " node " << p.node_path << " mode "
            << p.mode_index << "</title></circle>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace imrdmd
