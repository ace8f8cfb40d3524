#include "speckle_cs/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/rng.hpp"

namespace speckle_cs {
namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset) {
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                                static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(b.data(), b.size());
}

std::uint32_t check_header(const std::vector<unsigned char>& bytes, std::uint32_t magic,
                           std::size_t header_size, const std::filesystem::path& path) {
    if (bytes.size() < header_size) {
        throw LengthError(path.string() + ": truncated IDX header");
    }
    const std::uint32_t found = read_be32(bytes, 0);
    if (found != magic) {
        throw FormatError(path.string() + ": bad IDX magic");
    }
    return read_be32(bytes, 4);
}

}  // namespace

std::vector<GrayImage> load_idx_images(const std::filesystem::path& path) {
    const auto bytes = read_all(path);
    const std::uint32_t count = check_header(bytes, kIdxImageMagic, 16, path);
    const std::uint32_t rows = read_be32(bytes, 8);
    const std::uint32_t cols = read_be32(bytes, 12);
    const std::size_t per_image = std::size_t{rows} * cols;
    if (bytes.size() - 16 != per_image * count) {
        throw LengthError(path.string() + ": payload of " + std::to_string(bytes.size() - 16) +
                          " bytes, header declares " + std::to_string(per_image * count));
    }

    std::vector<GrayImage> images;
    images.reserve(count);
    std::size_t offset = 16;
    for (std::uint32_t k = 0; k < count; ++k) {
        std::vector<double> pixels(per_image);
        for (std::size_t i = 0; i < per_image; ++i) {
            pixels[i] = bytes[offset + i] / 255.0;
        }
        offset += per_image;
        images.emplace_back(static_cast<int>(cols), static_cast<int>(rows), std::move(pixels));
    }
    return images;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
    const auto bytes = read_all(path);
    const std::uint32_t count = check_header(bytes, kIdxLabelMagic, 8, path);
    if (bytes.size() - 8 != count) {
        throw LengthError(path.string() + ": label payload does not match declared count");
    }
    std::vector<int> labels(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        const int label = bytes[8 + k];
        if (label > 9) {
            throw FormatError(path.string() + ": label " + std::to_string(label) + " at index " +
                              std::to_string(k) + " outside 0..9");
        }
        labels[k] = label;
    }
    return labels;
}

std::vector<LabeledSample> load_labeled(const std::filesystem::path& images,
                                        const std::filesystem::path& labels) {
    auto imgs = load_idx_images(images);
    const auto labs = load_idx_labels(labels);
    if (imgs.size() != labs.size()) {
        throw ConsistencyError(std::to_string(imgs.size()) + " images but " +
                               std::to_string(labs.size()) + " labels");
    }
    std::vector<LabeledSample> out;
    out.reserve(imgs.size());
    for (std::size_t i = 0; i < imgs.size(); ++i) {
        out.push_back({std::move(imgs[i]), labs[i]});
    }
    return out;
}

void write_idx_images(const std::filesystem::path& path, const std::vector<GrayImage>& images) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ArgumentError("cannot write " + path.string());
    }
    const int rows = images.empty() ? kMnistSide : images.front().height();
    const int cols = images.empty() ? kMnistSide : images.front().width();
    put_be32(out, kIdxImageMagic);
    put_be32(out, static_cast<std::uint32_t>(images.size()));
    put_be32(out, static_cast<std::uint32_t>(rows));
    put_be32(out, static_cast<std::uint32_t>(cols));
    for (const auto& img : images) {
        if (img.height() != rows || img.width() != cols) {
            throw ArgumentError("IDX images must share dimensions");
        }
        for (double v : img.pixels()) {
            out.put(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
        }
    }
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ArgumentError("cannot write " + path.string());
    }
    put_be32(out, kIdxLabelMagic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int label : labels) {
        if (label < 0 || label > 9) {
            throw ArgumentError("label outside 0..9");
        }
        out.put(static_cast<char>(label));
    }
}

MnistPaths mnist_paths(const std::filesystem::path& dir) {
    // Both the canonical "-idx3-ubyte" and the dotted ".idx3-ubyte" spellings occur in the wild.
    auto pick = [&](const std::string& stem, const std::string& kind) {
        const auto dashed = dir / (stem + "-" + kind);
        if (std::filesystem::exists(dashed)) {
            return dashed;
        }
        const auto dotted = dir / (stem + "." + kind);
        return std::filesystem::exists(dotted) ? dotted : dashed;
    };
    return {pick("t10k-images", "idx3-ubyte"), pick("t10k-labels", "idx1-ubyte"),
            pick("train-images", "idx3-ubyte"), pick("train-labels", "idx1-ubyte")};
}

std::vector<LabeledSample> load_test_split(const std::filesystem::path& dir) {
    const auto paths = mnist_paths(dir);
    return load_labeled(paths.test_images, paths.test_labels);
}

std::vector<LabeledSample> pick_one_per_class(const std::vector<LabeledSample>& samples,
                                              std::uint64_t seed) {
    std::array<std::vector<std::size_t>, 10> by_class;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int label = samples[i].label;
        if (label < 0 || label > 9) {
            throw SelectionError("label outside 0..9 at index " + std::to_string(i));
        }
        by_class[static_cast<std::size_t>(label)].push_back(i);
    }
    std::vector<LabeledSample> picked;
    picked.reserve(10);
    for (std::size_t c = 0; c < 10; ++c) {
        const auto& members = by_class[c];
        if (members.empty()) {
            throw SelectionError("no sample of class " + std::to_string(c));
        }
        Rng rng(derive_seed(seed, {c}));
        picked.push_back(samples[members[rng.next() % members.size()]]);
    }
    return picked;
}

double mean_sparsity(const std::vector<GrayImage>& images, double threshold) {
    if (images.empty()) {
        throw ArgumentError("mean_sparsity of an empty image list");
    }
    if (!(threshold >= 0.0 && threshold < 1.0)) {
        throw ArgumentError("sparsity threshold must lie in [0,1)");
    }
    double total = 0.0;
    for (const auto& img : images) {
        const auto px = img.pixels();
        const auto above = std::count_if(px.begin(), px.end(), [&](double v) { return v > threshold; });
        total += static_cast<double>(above) / static_cast<double>(px.size());
    }
    return total / static_cast<double>(images.size());
}

}  // namespace speckle_cs
