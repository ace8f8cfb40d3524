#include "speckle_cs/forward_model.hpp"

#include <algorithm>
#include <cmath>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/parallel.hpp"
#include "speckle_cs/rng.hpp"

namespace speckle_cs {
namespace {

double sample_std(const double* data, Eigen::Index count) {
    if (count < 2) {
        return 0.0;
    }
    const Eigen::Map<const Vector> v(data, count);
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(count - 1));
}

void perturb(double* data, Eigen::Index count, const NoiseSpec& spec) {
    if (spec.level < 0.0 || !std::isfinite(spec.level)) {
        throw ArgumentError("noise level must be a finite value >= 0");
    }
    if (spec.level == 0.0) {
        return;
    }
    const double sigma = spec.level * sample_std(data, count);
    Rng rng(spec.seed);
    for (Eigen::Index i = 0; i < count; ++i) {
        data[i] += sigma * rng.normal();
    }
}

}  // namespace

MeasurementMatrix build_matrix(int count, const SpeckleConfig& config, int jobs) {
    if (count <= 0) {
        throw ArgumentError("measurement count m must be >= 1");
    }
    config.validate();
    const int n = config.grid * config.grid;
    MeasurementMatrix a;
    a.values.resize(count, n);
    a.row_seeds.resize(static_cast<std::size_t>(count));
    a.cutoff = config.cutoff;
    a.source = "simulated";
    parallel_for(static_cast<std::size_t>(count), jobs, [&](std::size_t row) {
        SpeckleConfig cfg = config;
        cfg.seed = derive_seed(config.seed, {row});
        a.row_seeds[row] = cfg.seed;
        const GrayImage pattern = generate_speckle(cfg);
        a.values.row(static_cast<Eigen::Index>(row)) = pattern.flatten().transpose();
    });
    return a;
}

MeasurementMatrix matrix_from_patterns(const std::vector<GrayImage>& patterns, std::string source) {
    if (patterns.empty()) {
        throw ArgumentError("no patterns supplied");
    }
    const auto n = static_cast<Eigen::Index>(patterns.front().size());
    MeasurementMatrix a;
    a.values.resize(static_cast<Eigen::Index>(patterns.size()), n);
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        if (static_cast<Eigen::Index>(patterns[i].size()) != n) {
            throw ArgumentError("patterns differ in size");
        }
        a.values.row(static_cast<Eigen::Index>(i)) = patterns[i].flatten().transpose();
    }
    a.source = std::move(source);
    return a;
}

BucketSignal measure(const MeasurementMatrix& a, const GrayImage& x) {
    if (a.cols() != static_cast<Eigen::Index>(x.size())) {
        throw ArgumentError("matrix has " + std::to_string(a.cols()) + " columns but image has " +
                            std::to_string(x.size()) + " pixels");
    }
    return {a.values * x.flatten()};
}

MeasurementMatrix add_noise(MeasurementMatrix target, const NoiseSpec& spec) {
    perturb(target.values.data(), target.values.size(), spec);
    return target;
}

BucketSignal add_noise(BucketSignal target, const NoiseSpec& spec) {
    perturb(target.values.data(), target.values.size(), spec);
    return target;
}

Acquisition simulate_acquisition(const GrayImage& truth, int count, double cutoff, double noise_level,
                                 std::uint64_t seed, int jobs) {
    SpeckleConfig config;
    config.grid = truth.width();
    config.cutoff = cutoff;
    config.seed = derive_seed(seed, {0});
    if (truth.width() != truth.height()) {
        throw ArgumentError("ground truth must be square");
    }
    MeasurementMatrix clean = build_matrix(count, config, jobs);
    BucketSignal y = measure(clean, truth);
    Acquisition acq;
    acq.signal = add_noise(std::move(y), NoiseSpec{noise_level, derive_seed(seed, {2})});
    acq.matrix = add_noise(std::move(clean), NoiseSpec{noise_level, derive_seed(seed, {1})});
    return acq;
}

GrayImage resize_area(const GrayImage& image, int width, int height) {
    if (width <= 0 || height <= 0 || image.empty()) {
        throw ArgumentError("resize_area needs positive target and non-empty source");
    }
    const double sx = static_cast<double>(image.width()) / width;
    const double sy = static_cast<double>(image.height()) / height;
    GrayImage out(width, height);
    for (int row = 0; row < height; ++row) {
        const double y0 = row * sy;
        const double y1 = y0 + sy;
        for (int col = 0; col < width; ++col) {
            const double x0 = col * sx;
            const double x1 = x0 + sx;
            double acc = 0.0;
            for (int r = static_cast<int>(std::floor(y0)); r < std::min<double>(std::ceil(y1), image.height()); ++r) {
                const double wy = std::min<double>(r + 1, y1) - std::max<double>(r, y0);
                if (wy <= 0.0) {
                    continue;
                }
                for (int c = static_cast<int>(std::floor(x0)); c < std::min<double>(std::ceil(x1), image.width()); ++c) {
                    const double wx = std::min<double>(c + 1, x1) - std::max<double>(c, x0);
                    if (wx > 0.0) {
                        acc += wx * wy * image.at(r, c);
                    }
                }
            }
            out.at(row, col) = acc / (sx * sy);
        }
    }
    return out;
}

GrayImage center_crop_square(const GrayImage& image) {
    const int side = std::min(image.width(), image.height());
    const int top = (image.height() - side) / 2;
    const int left = (image.width() - side) / 2;
    GrayImage out(side, side);
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            out.at(r, c) = image.at(top + r, left + c);
        }
    }
    return out;
}

}  // namespace speckle_cs
