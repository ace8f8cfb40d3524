#include <cmath>

#include <gtest/gtest.h>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/forward_model.hpp"
#include "speckle_cs/metrics.hpp"
#include "speckle_cs/rng.hpp"
#include "support.hpp"

using namespace speckle_cs;
using testing_support::gaussian_matrix;
using testing_support::gaussian_vector;

TEST(BuildMatrix, ShapeAndDeterminism) {
    const SpeckleConfig c{28, 0.5, 42};
    const auto a = build_matrix(100, c);
    EXPECT_EQ(a.rows(), 100);
    EXPECT_EQ(a.cols(), 784);
    EXPECT_EQ(a.row_seeds.size(), 100u);
    EXPECT_EQ(a.values, build_matrix(100, c, 4).values);
    EXPECT_THROW(build_matrix(0, c), ArgumentError);
}

TEST(BuildMatrix, RowsMatchIndividualPatterns) {
    const SpeckleConfig c{28, 0.3, 7};
    const auto a = build_matrix(5, c);
    for (int i = 0; i < 5; ++i) {
        const GrayImage p = generate_speckle({28, 0.3, derive_seed(7, {static_cast<std::uint64_t>(i)})});
        EXPECT_EQ(Vector(a.values.row(i).transpose()), p.flatten());
    }
}

TEST(BuildMatrix, RowsAreUncorrelated) {
    const auto a = build_matrix(100, {28, 0.7, 3});
    double sum = 0;
    int pairs = 0;
    for (int i = 0; i < 100; ++i)
        for (int j = i + 1; j < 100; ++j) {
            sum += *pearson(Vector(a.values.row(i).transpose()), Vector(a.values.row(j).transpose()));
            ++pairs;
        }
    EXPECT_LT(std::abs(sum / pairs), 0.05);
}

TEST(Measure, ZeroImageAndOnesRow) {
    const auto a = build_matrix(4, {28, 0.5, 1});
    EXPECT_EQ(measure(a, GrayImage(28, 28, 0.0)).values, Vector::Zero(4));
    MeasurementMatrix ones;
    ones.values = RowMajorMatrix::Ones(1, 9);
    const GrayImage x = GrayImage::from_flat(3, 3, gaussian_vector(9, 2));
    EXPECT_NEAR(measure(ones, x).values[0], x.flatten().sum(), 1e-14);
}

TEST(Measure, MatchesNaiveTripleLoop) {
    MeasurementMatrix a;
    a.values = gaussian_matrix(5, 9, 10);
    const GrayImage x = GrayImage::from_flat(3, 3, gaussian_vector(9, 11));
    const Vector y = measure(a, x).values;
    for (int i = 0; i < 5; ++i) {
        double acc = 0;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) acc += a.values(i, r * 3 + c) * x.at(r, c);
        EXPECT_LT(std::abs(y[i] - acc), 1e-12);
    }
}

TEST(Measure, DimensionMismatch) {
    MeasurementMatrix a;
    a.values = gaussian_matrix(2, 5, 1);
    EXPECT_THROW(measure(a, GrayImage(2, 2, 0.0)), ArgumentError);
}

TEST(Measure, Linear) {
    const auto a = build_matrix(20, {28, 0.5, 9});
    const Vector x1 = gaussian_vector(784, 1), x2 = gaussian_vector(784, 2);
    const Vector lhs = measure(a, GrayImage::from_flat(28, 28, 2.5 * x1 - 0.7 * x2)).values;
    const Vector rhs = 2.5 * measure(a, GrayImage::from_flat(28, 28, x1)).values -
                       0.7 * measure(a, GrayImage::from_flat(28, 28, x2)).values;
    EXPECT_LT((lhs - rhs).norm(), 1e-10 * rhs.norm());
}

TEST(Noise, ZeroLevelIsIdentity) {
    BucketSignal y{gaussian_vector(50, 3)};
    EXPECT_EQ(add_noise(y, {0.0, 5}).values, y.values);
}

TEST(Noise, StatisticsMatchLevelTimesSigma) {
    MeasurementMatrix a;
    a.values = 3.0 + 2.0 * gaussian_matrix(1000, 1000, 4).array();
    const double mean = a.values.mean();
    const double sigma = std::sqrt((a.values.array() - mean).square().sum() / (a.values.size() - 1));
    const auto noisy = add_noise(a, {0.10, 77});
    const RowMajorMatrix diff = noisy.values - a.values;
    const double count = static_cast<double>(diff.size());
    const double dmean = diff.mean();
    const double dstd = std::sqrt((diff.array() - dmean).square().sum() / (count - 1));
    EXPECT_NEAR(dstd, 0.10 * sigma, 0.02 * 0.10 * sigma);
    EXPECT_LT(std::abs(dmean), 3.0 * 0.10 * sigma / std::sqrt(count));
    EXPECT_EQ(add_noise(a, {0.10, 77}).values, noisy.values);
}

TEST(Acquisition, NoiseStreamsIndependentAndSignalFromCleanMatrix) {
    const GrayImage truth = GrayImage::from_flat(28, 28, gaussian_vector(784, 5).cwiseAbs());
    const auto clean = simulate_acquisition(truth, 30, 0.5, 0.0, 12);
    const auto noisy = simulate_acquisition(truth, 30, 0.5, 0.1, 12);
    EXPECT_EQ(clean.signal.values, measure(clean.matrix, truth).values);
    EXPECT_NE(noisy.matrix.values, clean.matrix.values);
    EXPECT_NE(noisy.signal.values, clean.signal.values);
    // y perturbation is not derivable from the A perturbation.
    const Vector y_from_noisy_a = measure(noisy.matrix, truth).values;
    EXPECT_GT((y_from_noisy_a - noisy.signal.values).norm(), 0.0);
    const auto again = simulate_acquisition(truth, 30, 0.5, 0.1, 12);
    EXPECT_EQ(again.matrix.values, noisy.matrix.values);
    EXPECT_EQ(again.signal.values, noisy.signal.values);
}

TEST(Resize, AreaAverageAndCrop) {
    GrayImage img(4, 2, 0.0);
    img.at(0, 0) = 1.0;
    img.at(1, 1) = 1.0;
    const GrayImage cropped = center_crop_square(img);
    EXPECT_EQ(cropped.width(), 2);
    EXPECT_EQ(cropped.at(0, 0), 0.0);
    const GrayImage small = resize_area(GrayImage(4, 4, 0.5), 2, 2);
    for (double v : small.pixels()) EXPECT_DOUBLE_EQ(v, 0.5);
    GrayImage block(4, 4, 0.0);
    block.at(0, 0) = 1.0;
    EXPECT_DOUBLE_EQ(resize_area(block, 2, 2).at(0, 0), 0.25);
    EXPECT_DOUBLE_EQ(resize_area(GrayImage(56, 56, 0.2), 28, 28).flatten().mean(), 0.2);
}
