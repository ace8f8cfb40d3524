#pragma once

#include <optional>
#include <span>

#include "speckle_cs/image.hpp"

namespace speckle_cs {

/// Sample Pearson correlation. Returns nullopt when either input has zero
/// variance (the coefficient is undefined), never a silent 0.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);
std::optional<double> pearson(const GrayImage& a, const GrayImage& b);
std::optional<double> pearson(const Vector& a, const Vector& b);

}  // namespace speckle_cs
