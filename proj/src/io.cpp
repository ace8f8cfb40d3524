#include "speckle_cs/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <png.h>

#include "speckle_cs/errors.hpp"

namespace speckle_cs {
namespace {

using nlohmann::json;

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<unsigned char> to_le_bytes(std::span<const double> values) {
    std::vector<unsigned char> out;
    out.reserve(values.size() * 8);
    for (double v : values) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
        }
    }
    return out;
}

std::vector<double> from_le_bytes(const std::vector<unsigned char>& bytes) {
    if (bytes.size() % 8 != 0) {
        throw LengthError("float64 payload length is not a multiple of 8");
    }
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= std::uint64_t{bytes[k * 8 + static_cast<std::size_t>(i)]} << (8 * i);
        }
        out[k] = std::bit_cast<double>(bits);
    }
    return out;
}

unsigned char to_byte(double v) {
    if (!std::isfinite(v)) {
        v = 0.0;
    }
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::vector<std::size_t> shape_of(const json& meta, const std::filesystem::path& stem) {
    if (!meta.contains("shape")) {
        throw FormatError(sidecar_path(stem).string() + ": sidecar lacks 'shape'");
    }
    return meta.at("shape").get<std::vector<std::size_t>>();
}

std::size_t product(const std::vector<std::size_t>& dims) {
    std::size_t p = 1;
    for (auto d : dims) {
        p *= d;
    }
    return p;
}

constexpr char kBase64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

std::filesystem::path data_path(const std::filesystem::path& stem) {
    auto p = stem;
    return p.replace_extension(".f64");
}

std::filesystem::path sidecar_path(const std::filesystem::path& stem) {
    auto p = stem;
    return p.replace_extension(".json");
}

void write_f64(const std::filesystem::path& path, std::span<const double> values) {
    const auto bytes = to_le_bytes(values);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ArgumentError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> read_f64(const std::filesystem::path& path) { return from_le_bytes(read_bytes(path)); }

void write_sidecar(const std::filesystem::path& path, const json& meta) {
    std::ofstream out(path);
    if (!out) {
        throw ArgumentError("cannot write " + path.string());
    }
    out << meta.dump() << '\n';
}

json read_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ArgumentError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void save_speckle_stack(const std::filesystem::path& stem, const std::vector<GrayImage>& patterns,
                        std::uint64_t seed, double cutoff) {
    if (patterns.empty()) {
        throw ArgumentError("empty speckle stack");
    }
    std::vector<double> flat;
    for (const auto& p : patterns) {
        flat.insert(flat.end(), p.pixels().begin(), p.pixels().end());
    }
    write_f64(data_path(stem), flat);
    write_sidecar(sidecar_path(stem), {{"shape", {patterns.size(), patterns.front().height(), patterns.front().width()}},
                                       {"seed", seed},
                                       {"nu", cutoff},
                                       {"dtype", "float64-le"}});
}

std::vector<GrayImage> load_speckle_stack(const std::filesystem::path& stem) {
    const json meta = read_sidecar(sidecar_path(stem));
    const auto shape = shape_of(meta, stem);
    if (shape.size() != 3) {
        throw FormatError("speckle stack shape must be [count, height, width]");
    }
    const auto values = read_f64(data_path(stem));
    if (values.size() != product(shape)) {
        throw LengthError(data_path(stem).string() + ": payload does not match sidecar shape");
    }
    const std::size_t per = shape[1] * shape[2];
    std::vector<GrayImage> out;
    for (std::size_t k = 0; k < shape[0]; ++k) {
        out.emplace_back(static_cast<int>(shape[2]), static_cast<int>(shape[1]),
                         std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(k * per),
                                             values.begin() + static_cast<std::ptrdiff_t>((k + 1) * per)));
    }
    return out;
}

void save_matrix(const std::filesystem::path& stem, const MeasurementMatrix& a, json extra) {
    write_f64(data_path(stem), std::span<const double>(a.values.data(), static_cast<std::size_t>(a.values.size())));
    if (!extra.is_object()) {
        extra = json::object();
    }
    extra["shape"] = {a.rows(), a.cols()};
    extra["nu"] = a.cutoff;
    extra["source"] = a.source;
    extra["row_seeds"] = a.row_seeds;
    extra["dtype"] = "float64-le";
    write_sidecar(sidecar_path(stem), extra);
}

MeasurementMatrix load_matrix(const std::filesystem::path& stem) {
    const json meta = read_sidecar(sidecar_path(stem));
    const auto shape = shape_of(meta, stem);
    if (shape.size() != 2) {
        throw FormatError("matrix shape must be [rows, cols]");
    }
    const auto values = read_f64(data_path(stem));
    if (values.size() != product(shape)) {
        throw LengthError(data_path(stem).string() + ": payload does not match sidecar shape");
    }
    MeasurementMatrix a;
    a.values = Eigen::Map<const RowMajorMatrix>(values.data(), static_cast<Eigen::Index>(shape[0]),
                                                static_cast<Eigen::Index>(shape[1]));
    a.cutoff = meta.value("nu", 0.0);
    a.source = meta.value("source", stem.filename().string());
    if (meta.contains("row_seeds")) {
        a.row_seeds = meta.at("row_seeds").get<std::vector<std::uint64_t>>();
        if (a.row_seeds.size() != shape[0]) {
            throw FormatError(sidecar_path(stem).string() + ": row_seeds does not match row count");
        }
    }
    return a;
}

void save_signal(const std::filesystem::path& stem, const BucketSignal& y, json extra) {
    write_f64(data_path(stem), std::span<const double>(y.values.data(), static_cast<std::size_t>(y.values.size())));
    if (!extra.is_object()) {
        extra = json::object();
    }
    extra["shape"] = {y.size()};
    extra["dtype"] = "float64-le";
    write_sidecar(sidecar_path(stem), extra);
}

BucketSignal load_signal(const std::filesystem::path& stem) {
    const json meta = read_sidecar(sidecar_path(stem));
    const auto shape = shape_of(meta, stem);
    const auto values = read_f64(data_path(stem));
    if (values.size() != product(shape)) {
        throw LengthError(data_path(stem).string() + ": payload does not match sidecar shape");
    }
    return {Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()))};
}

void write_signal_csv(const std::filesystem::path& path, const BucketSignal& y) {
    std::ofstream out(path);
    if (!out) {
        throw ArgumentError("cannot write " + path.string());
    }
    out << "index,y\n";
    char buf[64];
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", y.values[i]);
        out << i << ',' << buf << '\n';
    }
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open " + path.string());
    }
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P2") {
        throw MagicError(path.string() + ": not a PGM file");
    }
    auto next_int = [&]() {
        int v = 0;
        while (in >> std::ws && in.peek() == '#') {
            std::string comment;
            std::getline(in, comment);
        }
        if (!(in >> v)) {
            throw FormatError(path.string() + ": malformed PGM header");
        }
        return v;
    };
    const int width = next_int();
    const int height = next_int();
    const int maxval = next_int();
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
        throw FormatError(path.string() + ": invalid PGM dimensions");
    }
    std::vector<double> pixels(static_cast<std::size_t>(width) * height);
    if (magic == "P2") {
        for (auto& p : pixels) {
            p = static_cast<double>(next_int()) / maxval;
        }
    } else {
        in.get();
        const int bytes_per = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(pixels.size() * static_cast<std::size_t>(bytes_per));
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
            throw LengthError(path.string() + ": truncated PGM payload");
        }
        for (std::size_t i = 0; i < pixels.size(); ++i) {
            const int v = bytes_per == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
            pixels[i] = static_cast<double>(v) / maxval;
        }
    }
    return GrayImage(width, height, std::move(pixels));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ArgumentError("cannot write " + path.string());
    }
    out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
    for (double v : image.pixels()) {
        out.put(static_cast<char>(to_byte(v)));
    }
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (fp == nullptr) {
        throw ArgumentError("cannot write " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw Error("libpng failed writing " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(static_cast<std::size_t>(image.width()));
    for (int r = 0; r < image.height(); ++r) {
        for (int c = 0; c < image.width(); ++c) {
            row[static_cast<std::size_t>(c)] = to_byte(image.at(r, c));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

std::string base64_encode(std::span<const unsigned char> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        const std::uint32_t b0 = bytes[i];
        const std::uint32_t b1 = i + 1 < bytes.size() ? bytes[i + 1] : 0;
        const std::uint32_t b2 = i + 2 < bytes.size() ? bytes[i + 2] : 0;
        const std::uint32_t triple = (b0 << 16) | (b1 << 8) | b2;
        out.push_back(kBase64Alphabet[(triple >> 18) & 63]);
        out.push_back(kBase64Alphabet[(triple >> 12) & 63]);
        out.push_back(i + 1 < bytes.size() ? kBase64Alphabet[(triple >> 6) & 63] : '=');
        out.push_back(i + 2 < bytes.size() ? kBase64Alphabet[triple & 63] : '=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (text.size() % 4 != 0) {
        throw FormatError("base64 length is not a multiple of 4");
    }
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + static_cast<std::size_t>(k)];
            if (c == '=') {
                v[k] = 0;
                ++pad;
            } else {
                v[k] = value(c);
                if (v[k] < 0 || pad > 0) {
                    throw FormatError("invalid base64 character");
                }
            }
        }
        const std::uint32_t triple = (std::uint32_t(v[0]) << 18) | (std::uint32_t(v[1]) << 12) |
                                     (std::uint32_t(v[2]) << 6) | std::uint32_t(v[3]);
        out.push_back(static_cast<unsigned char>(triple >> 16));
        if (pad < 2) out.push_back(static_cast<unsigned char>(triple >> 8));
        if (pad < 1) out.push_back(static_cast<unsigned char>(triple));
    }
    return out;
}

std::string encode_vector(const Vector& v) {
    return base64_encode(to_le_bytes(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))));
}

Vector decode_vector(const std::string& text) {
    const auto values = from_le_bytes(base64_decode(text));
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json to_json(const SolveReport& report) {
    return {{"solution", encode_vector(report.solution)},
            {"solution_encoding", "base64-float64-le"},
            {"length", report.solution.size()},
            {"residual_norm", report.residual_norm},
            {"l1_norm", report.l1_norm},
            {"tau", report.tau},
            {"iterations", report.iterations},
            {"outer_iterations", report.outer_iterations},
            {"converged", report.converged}};
}

SolveReport solve_report_from_json(const json& j) {
    SolveReport report;
    report.solution = decode_vector(j.at("solution").get<std::string>());
    report.residual_norm = j.at("residual_norm").get<double>();
    report.l1_norm = j.at("l1_norm").get<double>();
    report.tau = j.value("tau", 0.0);
    report.iterations = j.at("iterations").get<int>();
    report.outer_iterations = j.value("outer_iterations", 0);
    report.converged = j.at("converged").get<bool>();
    return report;
}

json to_json(const ReconResult& result) {
    json losses = json::array();
    for (const auto& l : result.restart_losses) {
        losses.push_back(l ? json(*l) : json(nullptr));
    }
    return {{"best_loss", result.best_loss},
            {"best_restart", result.best_restart},
            {"restart_losses", losses},
            {"restart_initial_losses", result.restart_initial_losses},
            {"latent", encode_vector(result.latent)},
            {"latent_encoding", "base64-float64-le"},
            {"steps_recorded", result.loss_trace.size()},
            {"warnings", result.warnings}};
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw ArgumentError("cannot write " + tmp.string());
        }
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace speckle_cs
