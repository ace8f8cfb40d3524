#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "speckle_cs/image.hpp"

namespace speckle_cs {

struct LabeledSample {
    GrayImage image;
    int label = 0;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Reads an IDX3 unsigned-byte image file; bytes v become v/255.
std::vector<GrayImage> load_idx_images(const std::filesystem::path& path);

/// Reads an IDX1 unsigned-byte label file. Labels outside 0..9 are rejected.
std::vector<int> load_idx_labels(const std::filesystem::path& path);

/// Pairs an image file with its label file; the counts must agree.
std::vector<LabeledSample> load_labeled(const std::filesystem::path& images,
                                        const std::filesystem::path& labels);

/// Writes images as IDX3, quantizing with round(v * 255) after clamping to [0,1].
void write_idx_images(const std::filesystem::path& path, const std::vector<GrayImage>& images);
void write_idx_labels(const std::filesystem::path& path, const std::vector<int>& labels);

/// Standard MNIST file names inside `dir`.
struct MnistPaths {
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
};
MnistPaths mnist_paths(const std::filesystem::path& dir);

/// Test split of an MNIST-layout directory (the split validation digits are drawn from).
std::vector<LabeledSample> load_test_split(const std::filesystem::path& dir);

/// One sample per class 0..9, ordered by label. Pure function of (samples, seed).
/// Throws SelectionError when a class is missing.
std::vector<LabeledSample> pick_one_per_class(const std::vector<LabeledSample>& samples,
                                              std::uint64_t seed);

/// Mean fraction of pixels strictly above `threshold`.
double mean_sparsity(const std::vector<GrayImage>& images, double threshold = 0.0);

}  // namespace speckle_cs
