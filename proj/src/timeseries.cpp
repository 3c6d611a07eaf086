#include "imrdmd/timeseries.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace imrdmd {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

bool is_missing(std::string_view cell) {
    return cell.empty() || cell == "nan" || cell == "NaN" || cell == "NAN" || cell == "NA" ||
           cell == "null";
}

std::optional<double> parse_double(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
    return v;
}

double median(std::vector<double> v) {
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (v.size() % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

// Linear interpolation over NaN gaps; edges take the nearest observed value.
void repair_row(Vector& row, const std::string& sensor) {
    const Index n = row.size();
    Index prev = -1;
    for (Index k = 0; k < n; ++k) {
        if (std::isnan(row[k])) continue;
        if (prev < 0) {
            for (Index j = 0; j < k; ++j) row[j] = row[k];
        } else if (k - prev > 1) {
            const double a = row[prev];
            const double b = row[k];
            for (Index j = prev + 1; j < k; ++j) {
                const double w = static_cast<double>(j - prev) / static_cast<double>(k - prev);
                row[j] = a + w * (b - a);
            }
        }
        prev = k;
    }
    if (prev < 0) throw Error("sensor '" + sensor + "' has no readings");
    for (Index j = prev + 1; j < n; ++j) row[j] = row[prev];
}

void check_grid(const std::vector<double>& ts, double delta_t, double jitter) {
    for (std::size_t k = 1; k < ts.size(); ++k) {
        const double d = ts[k] - ts[k - 1];
        if (!(d > 0)) {
            throw Error("non-monotone timestamps at index " + std::to_string(k));
        }
        if (std::abs(d - delta_t) > jitter * delta_t) {
            throw Error("irregular sampling at index " + std::to_string(k) + ": step " +
                        std::to_string(d) + " vs delta_t " + std::to_string(delta_t));
        }
    }
}

} // namespace

SensorMatrix make_sensor_matrix(std::vector<std::string> ids, std::vector<double> timestamps,
                                Matrix values, double delta_t, double jitter) {
    if (!(delta_t > 0) || !std::isfinite(delta_t)) throw Error("delta_t must be positive");
    if (static_cast<Index>(ids.size()) != values.rows()) {
        throw Error("sensor id count does not match matrix rows");
    }
    if (static_cast<Index>(timestamps.size()) != values.cols()) {
        throw Error("timestamp count does not match matrix columns");
    }
    std::set<std::string> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) throw Error("duplicate sensor id '" + id + "'");
    }
    if (!values.allFinite()) throw Error("non-finite reading in sensor matrix");
    check_grid(timestamps, delta_t, jitter);
    return SensorMatrix{std::move(ids), std::move(timestamps), std::move(values), delta_t};
}

SensorMatrix ingest_csv(const std::filesystem::path& path, const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw Error("empty file " + path.string());
    auto header = split_commas(line);
    if (header.empty() || header.front() != "timestamp") {
        throw Error("row 1: first column must be named 'timestamp'");
    }
    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (std::size_t c = 1; c < header.size(); ++c) {
        std::string id(header[c]);
        if (id.empty()) throw Error("row 1: empty sensor id in column " + std::to_string(c + 1));
        if (!seen.insert(id).second) throw Error("row 1: duplicate sensor id '" + id + "'");
        ids.push_back(std::move(id));
    }
    if (ids.empty()) throw Error("row 1: no sensor columns");

    std::vector<double> ts;
    std::vector<std::vector<double>> cols;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        auto cells = split_commas(line);
        if (cells.size() != header.size()) {
            throw Error("row " + std::to_string(row_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(cells.size()));
        }
        auto t = parse_double(cells[0]);
        if (!t || !std::isfinite(*t)) {
            throw Error("row " + std::to_string(row_no) + ": bad timestamp '" +
                        std::string(cells[0]) + "'");
        }
        if (!ts.empty() && !(*t > ts.back())) {
            throw Error("row " + std::to_string(row_no) + ": non-monotone timestamp");
        }
        ts.push_back(*t);
        std::vector<double> col(ids.size(), nan);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (is_missing(cells[c])) continue;
            auto v = parse_double(cells[c]);
            if (!v) {
                throw Error("row " + std::to_string(row_no) + ": bad value '" +
                            std::string(cells[c]) + "' for sensor '" + ids[c - 1] + "'");
            }
            if (std::isfinite(*v)) col[c - 1] = *v;
        }
        cols.push_back(std::move(col));
    }

    const auto t_count = static_cast<Index>(ts.size());
    if (t_count < options.min_rows) {
        throw Error("insufficient snapshots in " + path.string() + ": " + std::to_string(t_count) +
                    " rows");
    }

    double delta_t = 0;
    if (t_count >= 2) {
        std::vector<double> diffs;
        diffs.reserve(ts.size() - 1);
        for (std::size_t k = 1; k < ts.size(); ++k) diffs.push_back(ts[k] - ts[k - 1]);
        delta_t = median(std::move(diffs));
        if (options.delta_t &&
            std::abs(delta_t - *options.delta_t) > options.jitter * *options.delta_t) {
            throw Error("sampling interval " + std::to_string(delta_t) + " does not match expected " +
                        std::to_string(*options.delta_t));
        }
        for (std::size_t k = 1; k < ts.size(); ++k) {
            const double d = ts[k] - ts[k - 1];
            if (std::abs(d - delta_t) > options.jitter * delta_t) {
                throw Error("row " + std::to_string(k + 2) + ": irregular sampling step " +
                            std::to_string(d));
            }
        }
    } else if (options.delta_t) {
        delta_t = *options.delta_t;
    } else {
        throw Error("insufficient snapshots to infer delta_t in " + path.string());
    }

    Matrix values(static_cast<Index>(ids.size()), t_count);
    for (Index k = 0; k < t_count; ++k) {
        for (Index p = 0; p < values.rows(); ++p) values(p, k) = cols[k][p];
    }
    if (t_count > 0) {
        for (Index p = 0; p < values.rows(); ++p) {
            Vector row = values.row(p).transpose();
            repair_row(row, ids[static_cast<std::size_t>(p)]);
            values.row(p) = row.transpose();
        }
    }

    // regularize jittered timestamps to the ideal grid
    std::vector<double> grid(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) grid[k] = ts.front() + static_cast<double>(k) * delta_t;

    return SensorMatrix{std::move(ids), std::move(grid), std::move(values), delta_t};
}

void write_csv(const SensorMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    char buf[64];
    auto put = [&](double v) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        out.write(buf, ptr - buf);
    };
    out << "timestamp";
    for (const auto& id : m.sensor_ids) out << ',' << id;
    out << '\n';
    for (Index k = 0; k < m.steps(); ++k) {
        put(m.timestamps[static_cast<std::size_t>(k)]);
        for (Index p = 0; p < m.sensors(); ++p) {
            out << ',';
            put(m.values(p, k));
        }
        out << '\n';
    }
    if (!out) throw Error("write failed for " + path.string());
}

SensorMap load_sensor_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("sensor map " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw Error("sensor map must be a JSON object");
    SensorMap map;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& v = it.value();
        if (!v.is_object() || !v.contains("node") || !v["node"].is_string()) {
            throw Error("sensor map entry '" + it.key() + "' needs a string 'node'");
        }
        SensorInfo info;
        info.node = v["node"].get<std::string>();
        info.category = v.value("category", std::string("default"));
        map.emplace(it.key(), std::move(info));
    }
    return map;
}

SnapshotPair shift_pair(const Matrix& snapshots) {
    const Index t = snapshots.cols();
    if (t < 2) throw Error("shift_pair needs at least 2 snapshots, got " + std::to_string(t));
    return SnapshotPair{snapshots.leftCols(t - 1), snapshots.rightCols(t - 1)};
}

SnapshotPair shift_pair(const SensorMatrix& m) { return shift_pair(m.values); }

SensorMatrix window(const SensorMatrix& m, Index t_start, Index t_end) {
    if (t_start < 0 || t_end > m.steps() || t_start >= t_end) {
        throw Error("window [" + std::to_string(t_start) + "," + std::to_string(t_end) +
                    ") out of range for T=" + std::to_string(m.steps()));
    }
    SensorMatrix out;
    out.sensor_ids = m.sensor_ids;
    out.timestamps.assign(m.timestamps.begin() + t_start, m.timestamps.begin() + t_end);
    out.values = m.values.middleCols(t_start, t_end - t_start);
    out.delta_t = m.delta_t;
    return out;
}

std::vector<SensorMatrix> replay_chunks(const SensorMatrix& m, Index chunk) {
    if (chunk < 1) throw Error("chunk must be at least 1");
    std::vector<SensorMatrix> out;
    for (Index s = 0; s < m.steps(); s += chunk) {
        out.push_back(window(m, s, std::min(m.steps(), s + chunk)));
    }
    return out;
}

SensorMatrix concat(const SensorMatrix& a, const SensorMatrix& b) {
    if (a.sensor_ids != b.sensor_ids) throw Error("concat: sensor ids differ");
    if (std::abs(a.delta_t - b.delta_t) > 1e-9 * a.delta_t) throw Error("concat: delta_t differs");
    SensorMatrix out;
    out.sensor_ids = a.sensor_ids;
    out.delta_t = a.delta_t;
    out.timestamps = a.timestamps;
    out.timestamps.insert(out.timestamps.end(), b.timestamps.begin(), b.timestamps.end());
    out.values.resize(a.sensors(), a.steps() + b.steps());
    out.values << a.values, b.values;
    return out;
}

} // namespace imrdmd
