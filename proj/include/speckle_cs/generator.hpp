#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "speckle_cs/image.hpp"

namespace speckle_cs {

inline constexpr int kDefaultLatentDim = 100;

/// Activation shape in height x width x channels order; flat vectors are 1 x 1 x len.
struct TensorShape {
    int height = 1;
    int width = 1;
    int channels = 1;

    int size() const { return height * width * channels; }
    bool operator==(const TensorShape&) const = default;
};

std::string to_string(const TensorShape& shape);

struct DenseLayer {
    int in = 0;
    int out = 0;
    RowMajorMatrix weight;  // in x out
    Vector bias;            // out
};

struct ReshapeLayer {
    TensorShape target;
};

/// Stride-s transposed convolution with "same" padding: output side = input side * s.
struct ConvTransposeLayer {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;
    int stride = 1;
    // K x K x out_channels x in_channels, row-major.
    std::vector<double> weight;

    int padding() const { return (kernel - stride) / 2; }
    const double* tap(int a, int b) const {
        return weight.data() + (static_cast<std::size_t>(a) * kernel + b) * out_channels * in_channels;
    }
};

/// Per-channel scale and shift (inference-time batch normalization).
struct AffineChannelLayer {
    Vector scale;
    Vector shift;
};

struct LeakyReluLayer {
    double alpha = 0.3;
};

struct TanhLayer {};

using Layer = std::variant<DenseLayer, ReshapeLayer, ConvTransposeLayer, AffineChannelLayer, LeakyReluLayer,
                           TanhLayer>;

std::string layer_kind(const Layer& layer);

/// Fixed-weight feed-forward generator mapping a latent vector to an image.
class GeneratorModel {
public:
    GeneratorModel() = default;
    /// Validates that layer shapes chain from a flat latent input.
    GeneratorModel(int latent_dim, std::vector<Layer> layers);

    int latent_dim() const { return latent_dim_; }
    const std::vector<Layer>& layers() const { return layers_; }
    /// Shape entering each layer, plus the final output shape at the end.
    const std::vector<TensorShape>& shapes() const { return shapes_; }
    TensorShape output_shape() const { return shapes_.back(); }
    int output_size() const { return shapes_.back().size(); }

    /// Output as a 2-D image: H x W for single-channel outputs, sqrt(L) x sqrt(L)
    /// for flat outputs of square length, otherwise a 1-row strip.
    int image_width() const;
    int image_height() const;

private:
    int latent_dim_ = 0;
    std::vector<Layer> layers_;
    std::vector<TensorShape> shapes_;
};

/// Reads a GGW1 weights file. Throws MagicError, ShapeError or LengthError.
GeneratorModel load_model(const std::filesystem::path& path);
GeneratorModel parse_model(const std::vector<unsigned char>& bytes);

/// Writes a GGW1 weights file (tensors narrowed to float32).
void save_model(const GeneratorModel& model, const std::filesystem::path& path);
std::vector<unsigned char> serialize_model(const GeneratorModel& model);

/// G(z) as a flat vector in generator range.
Vector forward_flat(const GeneratorModel& model, const Vector& z);

/// G(z) as an image in generator range (-1, 1) for tanh-terminated models.
GrayImage forward(const GeneratorModel& model, const Vector& z);

/// (g + 1) / 2 elementwise.
GrayImage to_measurement_domain(const GrayImage& g);
Vector to_measurement_domain(const Vector& g);

/// Activations of every layer; activations[0] is z, activations.back() is G(z).
std::vector<Vector> forward_trace(const GeneratorModel& model, const Vector& z);

/// Vector-Jacobian product u^T dG/dz given a forward trace.
Vector pullback(const GeneratorModel& model, const std::vector<Vector>& trace, const Vector& grad_output);

/// Single-layer application and adjoint, exposed for adjoint tests.
Vector apply_layer(const Layer& layer, const TensorShape& in_shape, const Vector& input);
Vector apply_layer_adjoint(const Layer& layer, const TensorShape& in_shape, const Vector& input,
                           const Vector& grad_output);

struct LossGradient {
    double loss = 0.0;
    Vector gradient;
};

/// L(z) = ||A * flatten((G(z)+1)/2) - y||^2 and dL/dz by reverse-mode accumulation.
LossGradient loss_and_gradient(const GeneratorModel& model, const Vector& z, const RowMajorMatrix& a,
                               const Vector& y);

/// Standard-normal latent draw.
Vector random_latent(int dim, std::uint64_t seed);

/// The recorded default DCGAN-style architecture with every weight zero.
/// Channel widths can be scaled down for fast fixtures.
GeneratorModel default_architecture(int latent_dim = kDefaultLatentDim, int base_channels = 256);

/// Deterministic random-weights model (He-style scaling) for tests and demos.
GeneratorModel random_model(std::uint64_t seed, int latent_dim, int base_channels);

struct AdamConfig {
    double lr = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    long step = 0;
    Vector m;
    Vector v;

    AdamState() = default;
    AdamState(AdamConfig cfg, Eigen::Index size)
        : config(cfg), m(Vector::Zero(size)), v(Vector::Zero(size)) {}
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, Vector& params, const Vector& grad);

}  // namespace speckle_cs
