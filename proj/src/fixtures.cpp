#include "speckle_cs/fixtures.hpp"

#include <algorithm>
#include <array>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/rng.hpp"

namespace speckle_cs {
namespace {

// Segment order: top, upper-right, lower-right, bottom, lower-left, upper-left, middle.
constexpr std::array<std::array<bool, 7>, 10> kSegments{{
    {true, true, true, true, true, true, false},
    {false, true, true, false, false, false, false},
    {true, true, false, true, true, false, true},
    {true, true, true, true, false, false, true},
    {false, true, true, false, false, true, true},
    {true, false, true, true, false, true, true},
    {true, false, true, true, true, true, true},
    {true, true, true, false, false, false, false},
    {true, true, true, true, true, true, true},
    {true, true, true, true, false, true, true},
}};

void fill_rect(GrayImage& img, int r0, int c0, int r1, int c1, double value) {
    for (int r = std::max(r0, 0); r < std::min(r1, img.height()); ++r) {
        for (int c = std::max(c0, 0); c < std::min(c1, img.width()); ++c) {
            img.at(r, c) = std::max(img.at(r, c), value);
        }
    }
}

}  // namespace

GrayImage synthetic_digit(int digit, std::uint64_t seed) {
    if (digit < 0 || digit > 9) {
        throw ArgumentError("digit must lie in 0..9");
    }
    Rng rng(seed);
    const int dy = static_cast<int>(rng.next() % 5) - 2;
    const int dx = static_cast<int>(rng.next() % 5) - 2;
    const int t = 2 + static_cast<int>(rng.next() % 2);
    const double ink = 0.75 + 0.25 * rng.uniform();

    const int top = 4 + dy;
    const int mid = 13 + dy;
    const int bottom = 22 + dy;
    const int left = 8 + dx;
    const int right = 18 + dx;

    GrayImage img(kMnistSide, kMnistSide);
    const auto& seg = kSegments[static_cast<std::size_t>(digit)];
    if (seg[0]) fill_rect(img, top, left, top + t, right + t, ink);
    if (seg[1]) fill_rect(img, top, right, mid + t, right + t, ink);
    if (seg[2]) fill_rect(img, mid, right, bottom + t, right + t, ink);
    if (seg[3]) fill_rect(img, bottom, left, bottom + t, right + t, ink);
    if (seg[4]) fill_rect(img, mid, left, bottom + t, left + t, ink);
    if (seg[5]) fill_rect(img, top, left, mid + t, left + t, ink);
    if (seg[6]) fill_rect(img, mid, left, mid + t, right + t, ink);

    // Soften edges with one 3x3 box pass, keeping the background exactly zero far from strokes.
    GrayImage soft(kMnistSide, kMnistSide);
    for (int r = 0; r < kMnistSide; ++r) {
        for (int c = 0; c < kMnistSide; ++c) {
            double acc = 0.0;
            for (int i = -1; i <= 1; ++i) {
                for (int j = -1; j <= 1; ++j) {
                    const int rr = r + i;
                    const int cc = c + j;
                    if (rr >= 0 && rr < kMnistSide && cc >= 0 && cc < kMnistSide) {
                        acc += img.at(rr, cc);
                    }
                }
            }
            soft.at(r, c) = std::max(img.at(r, c), acc / 9.0);
        }
    }
    return soft;
}

std::vector<LabeledSample> synthetic_dataset(int per_class, std::uint64_t seed) {
    if (per_class < 1) {
        throw ArgumentError("per_class must be >= 1");
    }
    std::vector<LabeledSample> out;
    for (int k = 0; k < per_class; ++k) {
        for (int d = 0; d < 10; ++d) {
            const auto s = derive_seed(seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(d)});
            out.push_back({synthetic_digit(d, s), d});
        }
    }
    return out;
}

void write_test_split(const std::filesystem::path& dir, const std::vector<LabeledSample>& samples) {
    std::filesystem::create_directories(dir);
    std::vector<GrayImage> images;
    std::vector<int> labels;
    for (const auto& s : samples) {
        images.push_back(s.image);
        labels.push_back(s.label);
    }
    write_idx_images(dir / "t10k-images-idx3-ubyte", images);
    write_idx_labels(dir / "t10k-labels-idx1-ubyte", labels);
}

GeneratorModel fixture_model(std::uint64_t seed, int latent_dim, int base_channels) {
    return random_model(seed, latent_dim, base_channels);
}

}  // namespace speckle_cs
