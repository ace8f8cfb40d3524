#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "speckle_cs/dataset.hpp"
#include "speckle_cs/generator.hpp"

namespace speckle_cs {

/// Seven-segment style glyph of `digit` on a 28x28 canvas with seeded jitter in
/// position, stroke width and intensity. Stand-in for MNIST when the real files
/// are unavailable.
GrayImage synthetic_digit(int digit, std::uint64_t seed);

/// `per_class` synthetic samples of every class, interleaved 0..9, 0..9, ...
std::vector<LabeledSample> synthetic_dataset(int per_class, std::uint64_t seed);

/// Writes `samples` as an MNIST-layout test split (t10k-*-ubyte) into `dir`.
void write_test_split(const std::filesystem::path& dir, const std::vector<LabeledSample>& samples);

/// Small random-weights generator with the default layer layout (base width 16).
GeneratorModel fixture_model(std::uint64_t seed = 20240501, int latent_dim = kDefaultLatentDim,
                             int base_channels = 16);

}  // namespace speckle_cs
