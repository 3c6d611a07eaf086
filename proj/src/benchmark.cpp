#include "imrdmd/benchmark.hpp"
#include "imrdmd/incremental.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>

namespace imrdmd {

SensorMatrix benchmark_data(Index sensors, Index steps, double noise_sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

    // cycles per step: one slow drift, a daily-like cycle and two fast ones
    const double rates[] = {0.0002, 0.002, 0.02, 0.11};
    const double amps[] = {3.0, 2.0, 1.0, 0.5};
    std::vector<SyntheticComponent> comps;
    for (std::size_t i = 0; i < std::size(rates); ++i) {
        SyntheticComponent c;
        c.pattern = Vector(sensors);
        c.quadrature = Vector(sensors);
        for (Index p = 0; p < sensors; ++p) c.pattern[p] = normal(rng);
        for (Index p = 0; p < sensors; ++p) c.quadrature[p] = normal(rng);
        c.frequency_hz = rates[i];
        c.amplitude = amps[i];
        c.phase = phase(rng);
        comps.push_back(std::move(c));
    }
    return generate_synthetic(sensors, steps, comps, noise_sigma, 1.0, seed + 1).matrix;
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkOptions& o, std::ostream* progress) {
    if (o.sizes.empty()) throw Error("benchmark: no sizes given");
    if (o.repeats < 1) throw Error("benchmark: repeats must be at least 1");
    if (o.chunk < 1) throw Error("benchmark: chunk must be at least 1");
    if (o.sensors < 1) throw Error("benchmark: need at least one sensor");
    using clock = std::chrono::steady_clock;

    std::vector<BenchmarkRow> rows;
    for (Index t : o.sizes) {
        if (t < 4) throw Error("benchmark: size " + std::to_string(t) + " below 4 steps");
        SensorMatrix all = benchmark_data(o.sensors, t + o.chunk, o.noise_sigma, o.seed);
        const SensorMatrix head = window(all, 0, t);
        const SensorMatrix tail = window(all, t, t + o.chunk);
        all = SensorMatrix{};

        std::vector<double> initial;
        std::vector<double> partial;
        // Phases run separately so a partial fit is not charged for the
        // allocator cleanup of the initial fit just before it.
        MrDmdTree tree;
        for (int r = 0; r < o.repeats; ++r) {
            const auto a = clock::now();
            tree = mrdmd_fit(head, o.config);
            initial.push_back(std::chrono::duration<double>(clock::now() - a).count());
        }
        for (int r = 0; r < o.repeats; ++r) {
            const auto a = clock::now();
            PartialFitResult updated = partial_fit(tree, tail);
            partial.push_back(std::chrono::duration<double>(clock::now() - a).count());
            if (updated.tree.total_timesteps != t + o.chunk) throw Error("benchmark: partial fit lost columns");
        }
        BenchmarkRow row;
        row.dataset = o.dataset;
        row.n = o.sensors;
        row.t = t;
        auto mean = [](const std::vector<double>& v) {
            double s = 0;
            for (double x : v) s += x;
            return s / static_cast<double>(v.size());
        };
        row.initial_fit = mean(initial);
        row.partial_fit = mean(partial);
        row.initial_min = *std::min_element(initial.begin(), initial.end());
        row.initial_max = *std::max_element(initial.begin(), initial.end());
        row.partial_min = *std::min_element(partial.begin(), partial.end());
        row.partial_max = *std::max_element(partial.begin(), partial.end());
        rows.push_back(row);
        if (progress) {
            *progress << "T=" << t << " initial " << row.initial_fit << " s, partial " << row.partial_fit
                      << " s (" << o.repeats << " runs)\n";
        }
    }
    return rows;
}

std::string format_benchmark_table(const std::vector<BenchmarkRow>& rows) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %8s %8s %14s %14s\n", "Dataset", "N", "T", "Initial Fit", "Partial Fit");
    out += line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-12s %8lld %8lld %14.4f %14.4f\n", r.dataset.c_str(),
                      static_cast<long long>(r.n), static_cast<long long>(r.t), r.initial_fit, r.partial_fit);
        out += line;
    }
    return out;
}

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, std::ostream& out) {
    out << "dataset,n,t,initial_fit,partial_fit,initial_min,initial_max,partial_min,partial_max\n";
    for (const auto& r : rows) {
        out << r.dataset << ',' << r.n << ',' << r.t << ',' << r.initial_fit << ',' << r.partial_fit << ','
            << r.initial_min << ',' << r.initial_max << ',' << r.partial_min << ',' << r.partial_max << '\n';
    }
}

} // namespace imrdmd
