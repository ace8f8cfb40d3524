#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "speckle_cs/image.hpp"
#include "speckle_cs/speckle.hpp"

namespace speckle_cs {

/// m x n matrix whose rows are flattened speckle intensity patterns.
struct MeasurementMatrix {
    RowMajorMatrix values;
    // Simulation provenance: per-row seeds and the cutoff they were drawn with.
    std::vector<std::uint64_t> row_seeds;
    double cutoff = 0.0;
    // Free-form tag for matrices loaded from recorded patterns.
    std::string source;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

/// Single-pixel detector readings y.
struct BucketSignal {
    Vector values;

    Eigen::Index size() const { return values.size(); }
};

/// Additive Gaussian noise with std = level * (sample std of the target's entries).
struct NoiseSpec {
    double level = 0.0;
    std::uint64_t seed = 0;
};

/// Stacks `count` independent speckle patterns; row i uses seed derive_seed(config.seed, {i}).
MeasurementMatrix build_matrix(int count, const SpeckleConfig& config, int jobs = 1);

/// Matrix from recorded patterns (already at the target size), tagged with `source`.
MeasurementMatrix matrix_from_patterns(const std::vector<GrayImage>& patterns, std::string source);

/// y = A * flatten(x).
BucketSignal measure(const MeasurementMatrix& a, const GrayImage& x);

MeasurementMatrix add_noise(MeasurementMatrix target, const NoiseSpec& spec);
BucketSignal add_noise(BucketSignal target, const NoiseSpec& spec);

/// Noisy (or clean) simulated acquisition of one sample.
struct Acquisition {
    MeasurementMatrix matrix;
    BucketSignal signal;
};

/// Builds A from `seed`, measures `truth`, then perturbs A and y with independent
/// noise streams. The returned matrix is the noisy one handed to solvers.
Acquisition simulate_acquisition(const GrayImage& truth, int count, double cutoff, double noise_level,
                                 std::uint64_t seed, int jobs = 1);

/// Area-weighted resampling to width x height (box filter with fractional overlap).
GrayImage resize_area(const GrayImage& image, int width, int height);

/// Centered square crop of side min(width, height).
GrayImage center_crop_square(const GrayImage& image);

}  // namespace speckle_cs
