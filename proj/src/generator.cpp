#include "speckle_cs/generator.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/rng.hpp"

namespace speckle_cs {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'G', 'G', 'W', '1'};
constexpr int kFormatVersion = 1;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

using ConstRowMap = Eigen::Map<const RowMajorMatrix>;
using RowMap = Eigen::Map<RowMajorMatrix>;

TensorShape output_shape_of(const Layer& layer, const TensorShape& in, std::size_t index) {
    auto fail = [&](const std::string& what) {
        return ShapeError("layer " + std::to_string(index) + " (" + layer_kind(layer) + "): " + what +
                          ", input " + to_string(in));
    };
    return std::visit(
        Overloaded{
            [&](const DenseLayer& l) -> TensorShape {
                if (l.in != in.size()) {
                    throw fail("expects " + std::to_string(l.in) + " inputs");
                }
                if (l.weight.rows() != l.in || l.weight.cols() != l.out || l.bias.size() != l.out) {
                    throw fail("weight/bias tensors do not match declared sizes");
                }
                return {1, 1, l.out};
            },
            [&](const ReshapeLayer& l) -> TensorShape {
                if (l.target.size() != in.size() || l.target.height < 1 || l.target.width < 1) {
                    throw fail("cannot reshape to " + to_string(l.target));
                }
                return l.target;
            },
            [&](const ConvTransposeLayer& l) -> TensorShape {
                if (l.in_channels != in.channels) {
                    throw fail("expects " + std::to_string(l.in_channels) + " channels");
                }
                if (l.stride < 1 || l.kernel < l.stride) {
                    throw fail("kernel must be >= stride >= 1");
                }
                if (l.weight.size() !=
                    static_cast<std::size_t>(l.kernel) * l.kernel * l.out_channels * l.in_channels) {
                    throw fail("weight tensor size mismatch");
                }
                return {in.height * l.stride, in.width * l.stride, l.out_channels};
            },
            [&](const AffineChannelLayer& l) -> TensorShape {
                if (l.scale.size() != in.channels || l.shift.size() != in.channels) {
                    throw fail("channel count mismatch");
                }
                return in;
            },
            [&](const LeakyReluLayer& l) -> TensorShape {
                if (!(l.alpha > 0.0 && l.alpha < 1.0)) {
                    throw fail("alpha must lie in (0,1)");
                }
                return in;
            },
            [&](const TanhLayer&) -> TensorShape { return in; },
        },
        layer);
}

void check_finite(const Vector& v, std::size_t index, const Layer& layer) {
    if (!v.allFinite()) {
        throw NumericError("non-finite output from layer " + std::to_string(index) + " (" + layer_kind(layer) +
                           ")");
    }
}

// --- GGW1 serialization helpers ---

std::vector<int> shape_list(const json& j) { return j.get<std::vector<int>>(); }

std::size_t product(const std::vector<int>& dims) {
    std::size_t p = 1;
    for (int d : dims) {
        if (d < 0) {
            throw ShapeError("negative tensor dimension");
        }
        p *= static_cast<std::size_t>(d);
    }
    return p;
}

class TensorReader {
public:
    TensorReader(const std::vector<unsigned char>& bytes, std::size_t offset) : bytes_(bytes), offset_(offset) {}

    std::vector<double> take(std::size_t count) {
        if (bytes_.size() - offset_ < count * 4) {
            throw LengthError("tensor payload truncated: need " + std::to_string(count * 4) + " bytes at offset " +
                              std::to_string(offset_) + ", have " + std::to_string(bytes_.size() - offset_));
        }
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t bits = std::uint32_t{bytes_[offset_]} | (std::uint32_t{bytes_[offset_ + 1]} << 8) |
                                 (std::uint32_t{bytes_[offset_ + 2]} << 16) |
                                 (std::uint32_t{bytes_[offset_ + 3]} << 24);
            out[i] = static_cast<double>(std::bit_cast<float>(bits));
            offset_ += 4;
        }
        return out;
    }

    std::size_t remaining() const { return bytes_.size() - offset_; }

private:
    const std::vector<unsigned char>& bytes_;
    std::size_t offset_;
};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
}

void put_tensor(std::vector<unsigned char>& out, const double* data, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(data[i])));
    }
}

}  // namespace

std::string to_string(const TensorShape& s) {
    return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" + std::to_string(s.channels);
}

std::string layer_kind(const Layer& layer) {
    return std::visit(Overloaded{
                          [](const DenseLayer&) { return std::string("dense"); },
                          [](const ReshapeLayer&) { return std::string("reshape"); },
                          [](const ConvTransposeLayer&) { return std::string("conv2d_transpose"); },
                          [](const AffineChannelLayer&) { return std::string("affine_channel"); },
                          [](const LeakyReluLayer&) { return std::string("leaky_relu"); },
                          [](const TanhLayer&) { return std::string("tanh"); },
                      },
                      layer);
}

GeneratorModel::GeneratorModel(int latent_dim, std::vector<Layer> layers)
    : latent_dim_(latent_dim), layers_(std::move(layers)) {
    if (latent_dim < 1) {
        throw ShapeError("latent_dim must be positive");
    }
    shapes_.push_back({1, 1, latent_dim});
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        shapes_.push_back(output_shape_of(layers_[i], shapes_.back(), i));
    }
}

int GeneratorModel::image_width() const {
    const TensorShape s = output_shape();
    if (s.height == 1 && s.width == 1) {
        const int side = static_cast<int>(std::lround(std::sqrt(s.channels)));
        return side * side == s.channels ? side : s.channels;
    }
    return s.channels == 1 ? s.width : s.size();
}

int GeneratorModel::image_height() const { return output_size() / image_width(); }

Vector apply_layer(const Layer& layer, const TensorShape& in_shape, const Vector& input) {
    return std::visit(
        Overloaded{
            [&](const DenseLayer& l) -> Vector { return l.weight.transpose() * input + l.bias; },
            [&](const ReshapeLayer&) -> Vector { return input; },
            [&](const ConvTransposeLayer& l) -> Vector {
                const int h = in_shape.height;
                const int w = in_shape.width;
                const int oh = h * l.stride;
                const int ow = w * l.stride;
                const int pad = l.padding();
                Vector out = Vector::Zero(static_cast<Eigen::Index>(oh) * ow * l.out_channels);
                const ConstRowMap x(input.data(), h * w, l.in_channels);
                RowMap y(out.data(), oh * ow, l.out_channels);
                RowMajorMatrix tap_out(h * w, l.out_channels);
                for (int a = 0; a < l.kernel; ++a) {
                    for (int b = 0; b < l.kernel; ++b) {
                        const ConstRowMap tap(l.tap(a, b), l.out_channels, l.in_channels);
                        tap_out.noalias() = x * tap.transpose();
                        for (int i = 0; i < h; ++i) {
                            const int oi = i * l.stride + a - pad;
                            if (oi < 0 || oi >= oh) {
                                continue;
                            }
                            for (int j = 0; j < w; ++j) {
                                const int oj = j * l.stride + b - pad;
                                if (oj < 0 || oj >= ow) {
                                    continue;
                                }
                                y.row(oi * ow + oj) += tap_out.row(i * w + j);
                            }
                        }
                    }
                }
                return out;
            },
            [&](const AffineChannelLayer& l) -> Vector {
                Vector out(input.size());
                const ConstRowMap x(input.data(), input.size() / l.scale.size(), l.scale.size());
                RowMap y(out.data(), x.rows(), x.cols());
                y = (x.array().rowwise() * l.scale.transpose().array()).rowwise() + l.shift.transpose().array();
                return out;
            },
            [&](const LeakyReluLayer& l) -> Vector {
                return input.unaryExpr([alpha = l.alpha](double v) { return v > 0.0 ? v : alpha * v; });
            },
            [&](const TanhLayer&) -> Vector { return input.array().tanh().matrix(); },
        },
        layer);
}

Vector apply_layer_adjoint(const Layer& layer, const TensorShape& in_shape, const Vector& input,
                           const Vector& grad_output) {
    return std::visit(
        Overloaded{
            [&](const DenseLayer& l) -> Vector { return l.weight * grad_output; },
            [&](const ReshapeLayer&) -> Vector { return grad_output; },
            [&](const ConvTransposeLayer& l) -> Vector {
                const int h = in_shape.height;
                const int w = in_shape.width;
                const int oh = h * l.stride;
                const int ow = w * l.stride;
                const int pad = l.padding();
                Vector grad_in = Vector::Zero(static_cast<Eigen::Index>(h) * w * l.in_channels);
                const ConstRowMap g(grad_output.data(), oh * ow, l.out_channels);
                RowMap gx(grad_in.data(), h * w, l.in_channels);
                RowMajorMatrix gathered(h * w, l.out_channels);
                for (int a = 0; a < l.kernel; ++a) {
                    for (int b = 0; b < l.kernel; ++b) {
                        gathered.setZero();
                        bool any = false;
                        for (int i = 0; i < h; ++i) {
                            const int oi = i * l.stride + a - pad;
                            if (oi < 0 || oi >= oh) {
                                continue;
                            }
                            for (int j = 0; j < w; ++j) {
                                const int oj = j * l.stride + b - pad;
                                if (oj < 0 || oj >= ow) {
                                    continue;
                                }
                                gathered.row(i * w + j) = g.row(oi * ow + oj);
                                any = true;
                            }
                        }
                        if (any) {
                            const ConstRowMap tap(l.tap(a, b), l.out_channels, l.in_channels);
                            gx.noalias() += gathered * tap;
                        }
                    }
                }
                return grad_in;
            },
            [&](const AffineChannelLayer& l) -> Vector {
                Vector out(grad_output.size());
                const ConstRowMap g(grad_output.data(), grad_output.size() / l.scale.size(), l.scale.size());
                RowMap y(out.data(), g.rows(), g.cols());
                y = g.array().rowwise() * l.scale.transpose().array();
                return out;
            },
            [&](const LeakyReluLayer& l) -> Vector {
                Vector out(grad_output.size());
                for (Eigen::Index i = 0; i < out.size(); ++i) {
                    out[i] = input[i] > 0.0 ? grad_output[i] : l.alpha * grad_output[i];
                }
                return out;
            },
            [&](const TanhLayer&) -> Vector {
                const Vector t = input.array().tanh().matrix();
                return ((1.0 - t.array().square()) * grad_output.array()).matrix();
            },
        },
        layer);
}

std::vector<Vector> forward_trace(const GeneratorModel& model, const Vector& z) {
    if (z.size() != model.latent_dim()) {
        throw ArgumentError("latent vector has " + std::to_string(z.size()) + " entries, model expects " +
                            std::to_string(model.latent_dim()));
    }
    std::vector<Vector> trace;
    trace.reserve(model.layers().size() + 1);
    trace.push_back(z);
    for (std::size_t i = 0; i < model.layers().size(); ++i) {
        trace.push_back(apply_layer(model.layers()[i], model.shapes()[i], trace.back()));
        check_finite(trace.back(), i, model.layers()[i]);
    }
    return trace;
}

Vector pullback(const GeneratorModel& model, const std::vector<Vector>& trace, const Vector& grad_output) {
    Vector grad = grad_output;
    for (std::size_t i = model.layers().size(); i-- > 0;) {
        grad = apply_layer_adjoint(model.layers()[i], model.shapes()[i], trace[i], grad);
    }
    return grad;
}

Vector forward_flat(const GeneratorModel& model, const Vector& z) { return forward_trace(model, z).back(); }

GrayImage forward(const GeneratorModel& model, const Vector& z) {
    return GrayImage::from_flat(model.image_width(), model.image_height(), forward_flat(model, z));
}

GrayImage to_measurement_domain(const GrayImage& g) {
    GrayImage out = g;
    for (double& v : out.pixels()) {
        v = 0.5 * (v + 1.0);
    }
    return out;
}

Vector to_measurement_domain(const Vector& g) { return (0.5 * (g.array() + 1.0)).matrix(); }

LossGradient loss_and_gradient(const GeneratorModel& model, const Vector& z, const RowMajorMatrix& a,
                               const Vector& y) {
    if (a.cols() != model.output_size()) {
        throw ArgumentError("matrix has " + std::to_string(a.cols()) + " columns, generator emits " +
                            std::to_string(model.output_size()) + " pixels");
    }
    if (a.rows() != y.size()) {
        throw ArgumentError("matrix rows and signal length differ");
    }
    const auto trace = forward_trace(model, z);
    const Vector residual = a * to_measurement_domain(trace.back()) - y;
    // dL/dx = 2 A^T r and dx/dG = 1/2.
    const Vector grad_image = a.transpose() * residual;
    return {residual.squaredNorm(), pullback(model, trace, grad_image)};
}

Vector random_latent(int dim, std::uint64_t seed) {
    Rng rng(seed);
    Vector z(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        z[i] = rng.normal();
    }
    return z;
}

GeneratorModel default_architecture(int latent_dim, int base_channels) {
    if (base_channels < 4 || base_channels % 4 != 0) {
        throw ArgumentError("base_channels must be a positive multiple of 4");
    }
    const int c1 = base_channels;
    const int c2 = base_channels / 2;
    const int c3 = base_channels / 4;
    auto conv = [](int in, int out, int stride) {
        ConvTransposeLayer l;
        l.in_channels = in;
        l.out_channels = out;
        l.kernel = 5;
        l.stride = stride;
        l.weight.assign(static_cast<std::size_t>(25) * in * out, 0.0);
        return l;
    };
    auto affine = [](int ch) { return AffineChannelLayer{Vector::Ones(ch), Vector::Zero(ch)}; };
    std::vector<Layer> layers;
    layers.emplace_back(DenseLayer{latent_dim, 7 * 7 * c1, RowMajorMatrix::Zero(latent_dim, 7 * 7 * c1),
                                   Vector::Zero(7 * 7 * c1)});
    layers.emplace_back(ReshapeLayer{{7, 7, c1}});
    layers.emplace_back(affine(c1));
    layers.emplace_back(LeakyReluLayer{0.3});
    layers.emplace_back(conv(c1, c2, 1));
    layers.emplace_back(affine(c2));
    layers.emplace_back(LeakyReluLayer{0.3});
    layers.emplace_back(conv(c2, c3, 2));
    layers.emplace_back(affine(c3));
    layers.emplace_back(LeakyReluLayer{0.3});
    layers.emplace_back(conv(c3, 1, 2));
    layers.emplace_back(TanhLayer{});
    return GeneratorModel(latent_dim, std::move(layers));
}

GeneratorModel random_model(std::uint64_t seed, int latent_dim, int base_channels) {
    GeneratorModel shell = default_architecture(latent_dim, base_channels);
    std::vector<Layer> layers = shell.layers();
    Rng rng(seed);
    // Values are rounded through float so the model survives a GGW1 round trip unchanged.
    auto draw = [&](double scale) { return static_cast<double>(static_cast<float>(scale * rng.normal())); };
    for (auto& layer : layers) {
        std::visit(Overloaded{
                       [&](DenseLayer& l) {
                           const double s = std::sqrt(2.0 / l.in);
                           for (Eigen::Index i = 0; i < l.weight.size(); ++i) {
                               l.weight.data()[i] = draw(s);
                           }
                           for (Eigen::Index i = 0; i < l.bias.size(); ++i) {
                               l.bias[i] = draw(0.1);
                           }
                       },
                       [&](ConvTransposeLayer& l) {
                           // Each output pixel gathers about (K/s)^2 * in_channels taps.
                           const double fan_in = static_cast<double>(l.kernel * l.kernel) /
                                                 (l.stride * l.stride) * l.in_channels;
                           const double s = std::sqrt(2.0 / fan_in);
                           for (double& w : l.weight) {
                               w = draw(s);
                           }
                       },
                       [&](AffineChannelLayer& l) {
                           for (Eigen::Index i = 0; i < l.scale.size(); ++i) {
                               l.scale[i] = static_cast<double>(static_cast<float>(1.0 + 0.1 * rng.normal()));
                               l.shift[i] = draw(0.1);
                           }
                       },
                       [](auto&) {},
                   },
                   layer);
    }
    return GeneratorModel(latent_dim, std::move(layers));
}

std::vector<unsigned char> serialize_model(const GeneratorModel& model) {
    json header;
    header["format_version"] = kFormatVersion;
    header["latent_dim"] = model.latent_dim();
    const TensorShape out = model.output_shape();
    header["output_shape"] = {out.height, out.width, out.channels};
    json layers = json::array();
    std::vector<unsigned char> payload;
    for (const auto& layer : model.layers()) {
        json entry;
        entry["kind"] = layer_kind(layer);
        entry["params"] = json::object();
        entry["tensor_shapes"] = json::array();
        std::visit(Overloaded{
                       [&](const DenseLayer& l) {
                           entry["params"] = {{"in", l.in}, {"out", l.out}};
                           entry["tensor_shapes"] = {{l.in, l.out}, {l.out}};
                           put_tensor(payload, l.weight.data(), static_cast<std::size_t>(l.weight.size()));
                           put_tensor(payload, l.bias.data(), static_cast<std::size_t>(l.bias.size()));
                       },
                       [&](const ReshapeLayer& l) {
                           entry["params"] = {{"shape", {l.target.height, l.target.width, l.target.channels}}};
                       },
                       [&](const ConvTransposeLayer& l) {
                           entry["params"] = {{"in_ch", l.in_channels}, {"out_ch", l.out_channels},
                                              {"kernel", l.kernel},     {"stride", l.stride},
                                              {"padding", "same"}};
                           entry["tensor_shapes"] = {{l.kernel, l.kernel, l.out_channels, l.in_channels}};
                           put_tensor(payload, l.weight.data(), l.weight.size());
                       },
                       [&](const AffineChannelLayer& l) {
                           entry["params"] = {{"channels", l.scale.size()}};
                           entry["tensor_shapes"] = {{l.scale.size()}, {l.shift.size()}};
                           put_tensor(payload, l.scale.data(), static_cast<std::size_t>(l.scale.size()));
                           put_tensor(payload, l.shift.data(), static_cast<std::size_t>(l.shift.size()));
                       },
                       [&](const LeakyReluLayer& l) { entry["params"] = {{"alpha", l.alpha}}; },
                       [](const TanhLayer&) {},
                   },
                   layer);
        layers.push_back(std::move(entry));
    }
    header["layers"] = std::move(layers);

    const std::string text = header.dump();
    std::vector<unsigned char> bytes(kMagic, kMagic + 4);
    put_u32(bytes, static_cast<std::uint32_t>(text.size()));
    bytes.insert(bytes.end(), text.begin(), text.end());
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    return bytes;
}

void save_model(const GeneratorModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ArgumentError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

GeneratorModel parse_model(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw MagicError("not a GGW1 weights file (bad magic)");
    }
    if (bytes.size() < 8) {
        throw LengthError("GGW1 header length field truncated");
    }
    const std::uint32_t header_len = std::uint32_t{bytes[4]} | (std::uint32_t{bytes[5]} << 8) |
                                     (std::uint32_t{bytes[6]} << 16) | (std::uint32_t{bytes[7]} << 24);
    if (bytes.size() - 8 < header_len) {
        throw LengthError("GGW1 JSON header truncated");
    }
    json header;
    try {
        header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_len);
    } catch (const json::exception& e) {
        throw FormatError(std::string("GGW1 header is not valid JSON: ") + e.what());
    }

    try {
        if (header.value("format_version", 0) != kFormatVersion) {
            throw FormatError("unsupported GGW1 format_version");
        }
        const int latent_dim = header.at("latent_dim").get<int>();
        TensorReader reader(bytes, 8 + header_len);
        std::vector<Layer> layers;
        for (const auto& entry : header.at("layers")) {
            const std::string kind = entry.at("kind").get<std::string>();
            const json params = entry.value("params", json::object());
            const json shapes = entry.value("tensor_shapes", json::array());
            auto expect_shapes = [&](std::vector<std::vector<int>> expected) {
                std::vector<std::vector<int>> found;
                for (const auto& s : shapes) {
                    found.push_back(shape_list(s));
                }
                if (found != expected) {
                    throw ShapeError(kind + " layer: tensor_shapes disagree with params");
                }
            };
            if (kind == "dense") {
                DenseLayer l;
                l.in = params.at("in").get<int>();
                l.out = params.at("out").get<int>();
                expect_shapes({{l.in, l.out}, {l.out}});
                const auto w = reader.take(product({l.in, l.out}));
                const auto b = reader.take(static_cast<std::size_t>(l.out));
                l.weight = ConstRowMap(w.data(), l.in, l.out);
                l.bias = Eigen::Map<const Vector>(b.data(), l.out);
                layers.emplace_back(std::move(l));
            } else if (kind == "reshape") {
                const auto dims = params.at("shape").get<std::vector<int>>();
                if (dims.size() != 3) {
                    throw ShapeError("reshape target must have 3 dimensions");
                }
                layers.emplace_back(ReshapeLayer{{dims[0], dims[1], dims[2]}});
            } else if (kind == "conv2d_transpose") {
                ConvTransposeLayer l;
                l.in_channels = params.at("in_ch").get<int>();
                l.out_channels = params.at("out_ch").get<int>();
                l.kernel = params.at("kernel").get<int>();
                l.stride = params.at("stride").get<int>();
                if (params.value("padding", std::string("same")) != "same") {
                    throw FormatError("only 'same' padding is supported");
                }
                expect_shapes({{l.kernel, l.kernel, l.out_channels, l.in_channels}});
                l.weight = reader.take(product({l.kernel, l.kernel, l.out_channels, l.in_channels}));
                layers.emplace_back(std::move(l));
            } else if (kind == "affine_channel") {
                const int ch = params.at("channels").get<int>();
                expect_shapes({{ch}, {ch}});
                const auto scale = reader.take(static_cast<std::size_t>(ch));
                const auto shift = reader.take(static_cast<std::size_t>(ch));
                layers.emplace_back(AffineChannelLayer{Eigen::Map<const Vector>(scale.data(), ch),
                                                       Eigen::Map<const Vector>(shift.data(), ch)});
            } else if (kind == "leaky_relu") {
                layers.emplace_back(LeakyReluLayer{params.at("alpha").get<double>()});
            } else if (kind == "tanh") {
                layers.emplace_back(TanhLayer{});
            } else {
                throw FormatError("unknown layer kind '" + kind + "'");
            }
        }
        if (reader.remaining() != 0) {
            throw LengthError("GGW1 file has " + std::to_string(reader.remaining()) + " trailing bytes");
        }
        GeneratorModel model(latent_dim, std::move(layers));
        if (header.contains("output_shape")) {
            const auto dims = header["output_shape"].get<std::vector<int>>();
            const TensorShape out = model.output_shape();
            if (dims != std::vector<int>{out.height, out.width, out.channels}) {
                throw ShapeError("declared output_shape disagrees with layer chain (" + to_string(out) + ")");
            }
        }
        return model;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed GGW1 header: ") + e.what());
    }
}

GeneratorModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open weights file " + path.string());
    }
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_model(bytes);
}

void adam_step(AdamState& state, Vector& params, const Vector& grad) {
    if (params.size() != grad.size()) {
        throw ArgumentError("Adam: parameter and gradient lengths differ");
    }
    if (state.m.size() != params.size()) {
        state.m = Vector::Zero(params.size());
        state.v = Vector::Zero(params.size());
    }
    const AdamConfig& c = state.config;
    ++state.step;
    state.m = c.beta1 * state.m + (1.0 - c.beta1) * grad;
    state.v = c.beta2 * state.v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    params.array() -= c.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + c.epsilon);
}

}  // namespace speckle_cs
