#include "imrdmd/timeseries.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <filesystem>
#include <functional>
#include <fstream>
#include <random>

namespace fs = std::filesystem;
using namespace imrdmd;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "imrdmd_ts";
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(Ingest, RoundTripPreservesValues) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 1e3);
    Matrix v(4, 50);
    for (Index i = 0; i < v.size(); ++i) v.data()[i] = normal(rng) / 7.0;
    std::vector<double> ts;
    for (int k = 0; k < 50; ++k) ts.push_back(1000.0 + 0.5 * k);
    auto m = make_sensor_matrix({"a", "b", "c", "d"}, ts, v, 0.5);
    const auto path = temp_file("round.csv");
    write_csv(m, path);
    const auto back = ingest_csv(path);
    EXPECT_EQ(back.sensor_ids, m.sensor_ids);
    EXPECT_DOUBLE_EQ(back.delta_t, 0.5);
    EXPECT_LE((back.values - v).cwiseAbs().maxCoeff() / v.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ingest, MissingCellsInterpolated) {
    const auto path = temp_file("gaps.csv");
    write_text(path, "timestamp,x,y\n0,1,NA\n1,,5\n2,nan,6\n3,7,\n4,9,8\n");
    const auto m = ingest_csv(path);
    // x: 1, 3, 5, 7, 9 linear fill; y: leading gap takes the first reading
    EXPECT_DOUBLE_EQ(m.values(0, 1), 3.0);
    EXPECT_DOUBLE_EQ(m.values(0, 2), 5.0);
    EXPECT_DOUBLE_EQ(m.values(1, 0), 5.0);
    EXPECT_DOUBLE_EQ(m.values(1, 3), 7.0);
}

TEST(Ingest, DeltaIsMedianStep) {
    const auto path = temp_file("median.csv");
    write_text(path, "timestamp,x\n0,1\n2,1\n4.1,1\n6,1\n8,1\n");
    const auto m = ingest_csv(path);
    EXPECT_DOUBLE_EQ(m.delta_t, 2.0);
    EXPECT_DOUBLE_EQ(m.timestamps[2], 4.0);
}

TEST(Ingest, NonMonotoneNamesRow) {
    const auto path = temp_file("nonmono.csv");
    write_text(path, "timestamp,x\n0,1\n1,2\n1,3\n");
    EXPECT_NE(error_of([&] { ingest_csv(path); }).find("row 4"), std::string::npos);
}

TEST(Ingest, IrregularSamplingRejected) {
    const auto path = temp_file("irregular.csv");
    write_text(path, "timestamp,x\n0,1\n1,2\n2,3\n5,4\n6,5\n");
    EXPECT_NE(error_of([&] { ingest_csv(path); }).find("irregular"), std::string::npos);
}

TEST(Ingest, BadHeaderAndFieldsRejected) {
    const auto a = temp_file("hdr.csv");
    write_text(a, "time,x\n0,1\n1,2\n");
    EXPECT_THROW(ingest_csv(a), Error);
    const auto b = temp_file("fields.csv");
    write_text(b, "timestamp,x,y\n0,1,2\n1,2\n");
    EXPECT_NE(error_of([&] { ingest_csv(b); }).find("row 3"), std::string::npos);
    const auto c = temp_file("dup.csv");
    write_text(c, "timestamp,x,x\n0,1,2\n1,2,3\n");
    EXPECT_THROW(ingest_csv(c), Error);
}

TEST(Ingest, TooFewRows) {
    const auto path = temp_file("one.csv");
    write_text(path, "timestamp,x\n0,1\n");
    EXPECT_NE(error_of([&] { ingest_csv(path); }).find("insufficient"), std::string::npos);
    IngestOptions opts;
    opts.min_rows = 0;
    opts.delta_t = 1.0;
    EXPECT_EQ(ingest_csv(path, opts).steps(), 1);
}

TEST(Ingest, MissingFile) { EXPECT_THROW(ingest_csv("/nonexistent/file.csv"), Error); }

TEST(SensorMatrixTest, Invariants) {
    Matrix v = Matrix::Ones(2, 3);
    EXPECT_THROW(make_sensor_matrix({"a", "a"}, {0, 1, 2}, v, 1.0), Error);
    EXPECT_THROW(make_sensor_matrix({"a", "b"}, {0, 2, 1}, v, 1.0), Error);
    EXPECT_THROW(make_sensor_matrix({"a", "b"}, {0, 1, 2}, v, 0.0), Error);
    v(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(make_sensor_matrix({"a", "b"}, {0, 1, 2}, v, 1.0), Error);
}

TEST(ShiftPair, Shapes) {
    Matrix v(2, 5);
    for (Index k = 0; k < 5; ++k) v.col(k).setConstant(static_cast<double>(k));
    const auto pair = shift_pair(v);
    EXPECT_EQ(pair.x.cols(), 4);
    EXPECT_DOUBLE_EQ(pair.x(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(pair.y(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(pair.y(1, 3), 4.0);
    EXPECT_THROW(shift_pair(Matrix(2, 1)), Error);
}

TEST(Chunks, ReplayAndConcat) {
    Matrix v = Matrix::Random(3, 10);
    std::vector<double> ts;
    for (int k = 0; k < 10; ++k) ts.push_back(k);
    const auto m = make_sensor_matrix({"a", "b", "c"}, ts, v, 1.0);
    const auto chunks = replay_chunks(m, 4);
    ASSERT_EQ(chunks.size(), 3u);
    EXPECT_EQ(chunks[2].steps(), 2);
    const auto joined = concat(concat(chunks[0], chunks[1]), chunks[2]);
    EXPECT_EQ(joined.values, v);
    EXPECT_EQ(joined.timestamps, ts);
    EXPECT_THROW(window(m, 5, 5), Error);
}

TEST(Synthetic, NyquistRejected) {
    SyntheticComponent c;
    c.pattern = Vector::Ones(3);
    c.frequency_hz = 0.5;
    EXPECT_THROW(generate_synthetic(3, 10, {c}, 0.0, 1.0, 1), Error);
}

TEST(Synthetic, TravellingWaveHasRankTwo) {
    SyntheticComponent c;
    c.pattern = Vector::LinSpaced(6, 1.0, 2.0);
    c.quadrature = Vector::LinSpaced(6, -1.0, 1.0);
    c.frequency_hz = 0.05;
    const auto d = generate_synthetic(6, 100, {c}, 0.0, 1.0, 1);
    Eigen::JacobiSVD<Matrix> svd(d.clean);
    EXPECT_GT(svd.singularValues()[1], 1.0);
    EXPECT_LT(svd.singularValues()[2], 1e-10);
    ASSERT_EQ(d.exponents.size(), 2u);
}

TEST(Synthetic, SeedDeterminesNoise) {
    SyntheticComponent c;
    c.pattern = Vector::Ones(4);
    const auto a = generate_synthetic(4, 20, {c}, 0.3, 1.0, 9);
    const auto b = generate_synthetic(4, 20, {c}, 0.3, 1.0, 9);
    const auto other = generate_synthetic(4, 20, {c}, 0.3, 1.0, 10);
    EXPECT_EQ(a.matrix.values, b.matrix.values);
    EXPECT_NE(a.matrix.values, other.matrix.values);
}
