#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/experiments.hpp"
#include "speckle_cs/fixtures.hpp"
#include "speckle_cs/metrics.hpp"
#include "support.hpp"

using namespace speckle_cs;
using testing_support::gaussian_vector;

namespace {

double textbook_pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
        sab += a[i] * b[i];
        saa += a[i] * a[i];
        sbb += b[i] * b[i];
    }
    return (n * sab - sa * sb) / (std::sqrt(n * saa - sa * sa) * std::sqrt(n * sbb - sb * sb));
}

CorrelationRecord rec(double r, int digit, Method method = Method::bp) {
    CorrelationRecord c;
    c.nu = 0.2;
    c.m = 100;
    c.noise = 0.0;
    c.method = method;
    c.digit = digit;
    c.r = r;
    return c;
}

}  // namespace

TEST(Pearson, IdentityAndNegativeAffine) {
    const Vector x = gaussian_vector(50, 1);
    EXPECT_NEAR(*pearson(x, x), 1.0, 1e-15);
    const Vector y = (-2.0 * x.array() + 5.0).matrix();
    EXPECT_NEAR(*pearson(x, y), -1.0, 1e-15);
}

TEST(Pearson, TextbookOracle) {
    const std::vector<double> a{1, 0, 1, 0}, b{0.9, 0.1, 0.8, 0.2};
    EXPECT_NEAR(*pearson(a, b), textbook_pearson(a, b), 1e-12);
}

TEST(Pearson, SymmetryAndPositiveAffineInvariance) {
    const Vector a = gaussian_vector(100, 2), b = gaussian_vector(100, 3);
    const double r = *pearson(a, b);
    EXPECT_EQ(r, *pearson(b, a));
    EXPECT_NEAR(*pearson(Vector((3.5 * a.array() + 2.0).matrix()), b), r, 1e-12);
    EXPECT_NEAR(*pearson(a, Vector((0.01 * b.array() - 7.0).matrix())), r, 1e-12);
}

TEST(Pearson, UndefinedAndErrors) {
    const std::vector<double> c{2, 2, 2}, x{1, 2, 3};
    EXPECT_FALSE(pearson(c, c).has_value());
    EXPECT_FALSE(pearson(c, x).has_value());
    EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), ArgumentError);
    EXPECT_THROW(pearson(x, std::vector<double>{1, 2}), ArgumentError);
}

TEST(Nyquist, LineAndFlag) {
    EXPECT_EQ(nyquist_line(784), 784);
    EXPECT_EQ(nyquist_line(4), 4);
    EXPECT_TRUE(is_sub_nyquist(70, 784));
    EXPECT_FALSE(is_sub_nyquist(784, 784));
}

TEST(Aggregate, HandArithmetic) {
    const std::vector<CorrelationRecord> records{rec(0.5, 0), rec(0.7, 1), rec(0.9, 2), rec(0.3, 3)};
    const auto rows = aggregate(records);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_NEAR(rows[0].mean, 0.6, 1e-15);
    // Population std: sqrt(((.1)^2 + (.1)^2 + (.3)^2 + (.3)^2) / 4) = sqrt(0.05).
    EXPECT_NEAR(rows[0].stddev, std::sqrt(0.05), 1e-15);
    EXPECT_EQ(rows[0].count, 4);
}

TEST(Aggregate, IdenticalSingleUndefinedAndPermutation) {
    auto rows = aggregate({rec(0.8, 0), rec(0.8, 1), rec(0.8, 2)});
    EXPECT_EQ(rows[0].stddev, 0.0);
    rows = aggregate({rec(0.42, 0)});
    EXPECT_EQ(rows[0].mean, 0.42);
    auto undefined = rec(0.0, 5);
    undefined.r.reset();
    rows = aggregate({rec(0.4, 0), undefined, rec(0.6, 1)});
    EXPECT_EQ(rows[0].undefined, 1);
    EXPECT_EQ(rows[0].count, 2);
    EXPECT_NEAR(rows[0].mean, 0.5, 1e-15);
    EXPECT_THROW(aggregate({}), ArgumentError);

    std::vector<CorrelationRecord> many;
    for (int i = 0; i < 30; ++i) many.push_back(rec(std::sin(i), i % 10, static_cast<Method>(i % 3)));
    auto shuffled = many;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(4));
    const auto a = aggregate(many), b = aggregate(shuffled);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a[i].mean, b[i].mean, 1e-15);
        EXPECT_NEAR(a[i].stddev, b[i].stddev, 1e-15);
    }
}

TEST(Grid, DefaultCardinality) {
    SweepGrid g;
    g.noise_levels = {0.0};
    EXPECT_EQ(g.record_count(), 5u * 9u * 10u * 3u);
    EXPECT_EQ(enumerate_cells(g).size(), 5u * 9u * 3u);
    SweepGrid full;
    full.repetitions = 2;
    full.methods = {Method::bp, Method::bpdn, Method::gan, Method::diffraction};
    EXPECT_EQ(full.record_count(), 5u * 9u * 4u * 4u * 10u * 2u);
    EXPECT_EQ(enumerate_cells(full).size() * 10u, full.record_count());
}

TEST(Grid, Validation) {
    SweepGrid g;
    g.cutoffs = {};
    EXPECT_THROW(g.validate(), ArgumentError);
    g = SweepGrid{};
    g.cutoffs = {1.5};
    EXPECT_THROW(g.validate(), ArgumentError);
    g = SweepGrid{};
    g.measurements = {0};
    EXPECT_THROW(g.validate(), ArgumentError);
    g = SweepGrid{};
    g.repetitions = 0;
    EXPECT_THROW(g.validate(), ArgumentError);
}

TEST(Methods, NamesRoundTrip) {
    for (auto m : {Method::bp, Method::bpdn, Method::gan, Method::diffraction}) {
        EXPECT_EQ(parse_method(to_string(m)), m);
    }
    EXPECT_THROW(parse_method("omp"), ArgumentError);
}

TEST(Sweep, OneCellGivesTenRecordsInDigitOrder) {
    SweepGrid g;
    g.cutoffs = {0.3};
    g.measurements = {50};
    g.noise_levels = {0.0};
    g.methods = {Method::diffraction};
    const auto dataset = synthetic_dataset(3, 2);
    const auto records = run_sweep(g, nullptr, dataset, {});
    ASSERT_EQ(records.size(), 10u);
    for (int d = 0; d < 10; ++d) {
        EXPECT_EQ(records[static_cast<std::size_t>(d)].digit, d);
        ASSERT_TRUE(records[static_cast<std::size_t>(d)].r.has_value());
        EXPECT_GE(*records[static_cast<std::size_t>(d)].r, -1.0);
        EXPECT_LE(*records[static_cast<std::size_t>(d)].r, 1.0);
    }
}

TEST(Sweep, CardinalityDeterminismAndJobsIndependence) {
    SweepGrid g;
    g.cutoffs = {0.2, 0.7};
    g.measurements = {10, 30};
    g.noise_levels = {0.0, 0.1};
    g.methods = {Method::bp, Method::diffraction};
    g.repetitions = 2;
    g.seed = 5;
    const auto dataset = synthetic_dataset(4, 6);
    SweepOptions serial;
    serial.bpdn.max_inner = 300;
    serial.jobs = 1;
    SweepOptions parallel = serial;
    parallel.jobs = 4;
    const auto a = run_sweep(g, nullptr, dataset, serial);
    const auto b = run_sweep(g, nullptr, dataset, parallel);
    EXPECT_EQ(a.size(), g.record_count());
    EXPECT_EQ(a, b);
}

TEST(Sweep, GanWithoutModelRejected) {
    SweepGrid g;
    g.methods = {Method::gan};
    EXPECT_THROW(run_sweep(g, nullptr, synthetic_dataset(1, 1), {}), ArgumentError);
}

TEST(Sweep, SharedAcquisitionAcrossMethods) {
    EXPECT_EQ(sample_seed(1, 0.2, 100, 0.0, 0, 3), sample_seed(1, 0.2, 100, 0.0, 0, 3));
    EXPECT_NE(sample_seed(1, 0.2, 100, 0.0, 0, 3), sample_seed(1, 0.2, 100, 0.0, 0, 4));
    EXPECT_NE(sample_seed(1, 0.2, 100, 0.0, 0, 3), sample_seed(1, 0.3, 100, 0.0, 0, 3));
}

TEST(Csv, RecordsRoundTripExactly) {
    std::vector<CorrelationRecord> records;
    for (int i = 0; i < 10; ++i) {
        auto r = rec(std::cos(i * 0.37) * 0.999, i, static_cast<Method>(i % 4));
        r.nu = 0.1 * (1 + i % 7);
        r.noise = 0.05 * (i % 3);
        r.rep = i / 5;
        r.converged = i % 2 == 0;
        records.push_back(r);
    }
    records[4].r.reset();
    std::stringstream ss;
    write_records_csv(ss, records);
    EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), kRecordsHeader);
    EXPECT_EQ(read_records_csv(ss), records);
}

TEST(Csv, AggregateHeaderAndImageNames) {
    std::stringstream ss;
    write_aggregate_csv(ss, aggregate({rec(0.5, 0)}));
    std::string header;
    std::getline(ss, header);
    EXPECT_EQ(header, "nu,m,noise,method,mean_r,std_r,count,undefined");
    auto r = rec(0.1, 3, Method::gan);
    r.noise = 0.05;
    EXPECT_EQ(image_file_name(r), "gan_nu0.2_m100_noise0.05_d3.png");
    r.rep = 2;
    EXPECT_EQ(image_file_name(r), "gan_nu0.2_m100_noise0.05_d3_r2.png");
}
