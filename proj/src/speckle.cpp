#include "speckle_cs/speckle.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/rng.hpp"

namespace speckle_cs {
namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void require_square(const GrayImage& image) {
    if (image.width() != image.height() || image.width() <= 0) {
        throw ArgumentError("expected a non-empty square image, got " + std::to_string(image.width()) +
                            "x" + std::to_string(image.height()));
    }
}

}  // namespace

void validate_cutoff(double cutoff) {
    if (!(cutoff > 0.0 && cutoff <= 1.0)) {
        throw ArgumentError("cutoff nu must lie in (0,1], got " + std::to_string(cutoff));
    }
}

void SpeckleConfig::validate() const {
    if (grid < 1) {
        throw ArgumentError("speckle grid must be positive");
    }
    validate_cutoff(cutoff);
}

int centered_frequency(int index, int n) {
    return index < (n + 1) / 2 ? index : index - n;
}

std::vector<bool> pass_band(int n, double cutoff) {
    validate_cutoff(cutoff);
    std::vector<bool> mask(static_cast<std::size_t>(n) * n, true);
    if (cutoff >= 1.0) {
        return mask;
    }
    const double radius = cutoff * n / 2.0;
    const double r2 = radius * radius;
    for (int row = 0; row < n; ++row) {
        const int ky = centered_frequency(row, n);
        for (int col = 0; col < n; ++col) {
            const int kx = centered_frequency(col, n);
            mask[static_cast<std::size_t>(row) * n + col] = double(kx * kx + ky * ky) <= r2;
        }
    }
    return mask;
}

void fft2(ComplexField& field, bool inverse) {
    const int n = field.side;
    auto* data = reinterpret_cast<fftw_complex*>(field.values.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_2d(n, n, data, data, inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    if (inverse) {
        const double scale = 1.0 / (static_cast<double>(n) * n);
        for (auto& v : field.values) {
            v *= scale;
        }
    }
}

ComplexField random_field(int side, std::uint64_t seed) {
    Rng rng(seed);
    ComplexField field{side, std::vector<std::complex<double>>(static_cast<std::size_t>(side) * side)};
    for (auto& v : field.values) {
        const double re = rng.normal();
        const double im = rng.normal();
        v = {re, im};
    }
    return field;
}

ComplexField filtered_spectrum(const SpeckleConfig& config) {
    config.validate();
    ComplexField field = random_field(config.grid, config.seed);
    fft2(field, false);
    const auto mask = pass_band(config.grid, config.cutoff);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) {
            field.values[i] = 0.0;
        }
    }
    return field;
}

ComplexField filtered_field(const SpeckleConfig& config) {
    config.validate();
    if (config.cutoff >= 1.0) {
        return random_field(config.grid, config.seed);
    }
    ComplexField field = filtered_spectrum(config);
    fft2(field, true);
    return field;
}

GrayImage generate_speckle(const SpeckleConfig& config) {
    const ComplexField field = filtered_field(config);
    GrayImage out(config.grid, config.grid);
    auto px = out.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = std::norm(field.values[i]);
    }
    return out;
}

GrayImage low_pass(const GrayImage& image, double cutoff) {
    validate_cutoff(cutoff);
    require_square(image);
    if (cutoff >= 1.0) {
        return image;
    }
    const int n = image.width();
    ComplexField field{n, std::vector<std::complex<double>>(image.pixels().begin(), image.pixels().end())};
    const auto mask = pass_band(n, cutoff);
    fft2(field, false);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) {
            field.values[i] = 0.0;
        }
    }
    fft2(field, true);
    GrayImage out(n, n);
    auto px = out.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = field.values[i].real();
    }
    return out;
}

GrayImage diffraction_limited_image(const GrayImage& truth, double cutoff) {
    return low_pass(truth, cutoff);
}

GrayImage clip_nonnegative(GrayImage image) {
    for (double& v : image.pixels()) {
        v = std::max(v, 0.0);
    }
    return image;
}

}  // namespace speckle_cs
