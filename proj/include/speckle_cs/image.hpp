#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace speckle_cs {

using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kMnistSide = 28;

/// Square-or-rectangular grid of real intensities stored row-major.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, double fill = 0.0);
    GrayImage(int width, int height, std::vector<double> pixels);

    /// Builds a width x height image from a flattened row-major vector.
    static GrayImage from_flat(int width, int height, const Vector& flat);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }
    bool empty() const { return pixels_.empty(); }

    double& at(int row, int col) { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }
    double at(int row, int col) const { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }

    std::span<double> pixels() { return pixels_; }
    std::span<const double> pixels() const { return pixels_; }

    Vector flatten() const;

    bool operator==(const GrayImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> pixels_;
};

}  // namespace speckle_cs
