#pragma once

#include "imrdmd/mrdmd.hpp"
#include "imrdmd/timeseries.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace imrdmd {

struct BenchmarkOptions {
    std::vector<Index> sizes{2000, 5000, 10000, 16000}; ///< initial fit widths T
    Index sensors = 1000;
    Index chunk = 1000; ///< columns appended by the timed partial fit
    int repeats = 10;
    std::uint64_t seed = 0;
    double noise_sigma = 0.1;
    std::string dataset = "synthetic";
    MrDmdConfig config;
};

/// Mean wall-clock seconds over the repeats. Only the fit calls are timed;
/// data generation, copies and I/O are outside the clock.
struct BenchmarkRow {
    std::string dataset;
    Index n = 0;
    Index t = 0;
    double initial_fit = 0.0;
    double partial_fit = 0.0;
    double initial_min = 0.0;
    double initial_max = 0.0;
    double partial_min = 0.0;
    double partial_max = 0.0;
};

/// Sensor readings for the benchmark: a few slow and fast oscillations over
/// random spatial patterns plus Gaussian noise.
SensorMatrix benchmark_data(Index sensors, Index steps, double noise_sigma, std::uint64_t seed);

/// Fits the first T columns from scratch, then appends `chunk` more with
/// partial_fit, `repeats` times per size. `progress` gets one line per size.
std::vector<BenchmarkRow> run_benchmark(const BenchmarkOptions& options, std::ostream* progress = nullptr);

/// Plain-text table with columns Dataset, N, T, Initial Fit, Partial Fit.
std::string format_benchmark_table(const std::vector<BenchmarkRow>& rows);
void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, std::ostream& out);

} // namespace imrdmd
