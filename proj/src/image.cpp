#include "speckle_cs/image.hpp"

#include <string>

#include "speckle_cs/errors.hpp"

namespace speckle_cs {

GrayImage::GrayImage(int width, int height, double fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
        throw ArgumentError("image dimensions must be non-negative");
    }
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 0 || height < 0 ||
        pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ArgumentError("pixel count " + std::to_string(pixels_.size()) + " does not match " +
                            std::to_string(width) + "x" + std::to_string(height));
    }
}

GrayImage GrayImage::from_flat(int width, int height, const Vector& flat) {
    return GrayImage(width, height, std::vector<double>(flat.data(), flat.data() + flat.size()));
}

Vector GrayImage::flatten() const {
    return Eigen::Map<const Vector>(pixels_.data(), static_cast<Eigen::Index>(pixels_.size()));
}

}  // namespace speckle_cs
