#include <cmath>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/fixtures.hpp"
#include "speckle_cs/generator.hpp"
#include "support.hpp"

using namespace speckle_cs;
using testing_support::gaussian_matrix;
using testing_support::gaussian_vector;
using testing_support::TempDir;

namespace {

GeneratorModel dense_tanh_model() {
    DenseLayer d;
    d.in = 100;
    d.out = 4;
    d.weight = RowMajorMatrix::Constant(100, 4, 0.01f);
    d.bias = Vector::Constant(4, 0.5);
    return GeneratorModel(100, {d, TanhLayer{}});
}

// Independent scatter loop for a stride-s, same-padded transposed convolution (HWC).
Vector scatter_oracle(const ConvTransposeLayer& l, const TensorShape& in, const Vector& x) {
    const int s = l.stride, k = l.kernel, p = (k - s) / 2;
    const int oh = in.height * s, ow = in.width * s;
    Vector out = Vector::Zero(oh * ow * l.out_channels);
    for (int i = 0; i < in.height; ++i)
        for (int j = 0; j < in.width; ++j)
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) {
                    const int r = i * s + a - p, c = j * s + b - p;
                    if (r < 0 || r >= oh || c < 0 || c >= ow) continue;
                    for (int oc = 0; oc < l.out_channels; ++oc)
                        for (int ic = 0; ic < l.in_channels; ++ic) {
                            const double w =
                                l.weight[((static_cast<std::size_t>(a) * k + b) * l.out_channels + oc) * l.in_channels + ic];
                            out[(r * ow + c) * l.out_channels + oc] += x[(i * in.width + j) * in.channels + ic] * w;
                        }
                }
    return out;
}

ConvTransposeLayer random_conv(int in_ch, int out_ch, int k, int s, std::uint64_t seed) {
    ConvTransposeLayer l;
    l.in_channels = in_ch;
    l.out_channels = out_ch;
    l.kernel = k;
    l.stride = s;
    const Vector w = gaussian_vector(k * k * in_ch * out_ch, seed);
    l.weight.assign(w.data(), w.data() + w.size());
    return l;
}

std::vector<unsigned char> read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

double relative_error(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale < 1e-12 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace

TEST(Ggw1, DenseTanhFixtureShape) {
    TempDir dir;
    save_model(dense_tanh_model(), dir / "m.ggw1");
    const auto m = load_model(dir / "m.ggw1");
    EXPECT_EQ(m.output_size(), 4);
    EXPECT_EQ(m.latent_dim(), 100);
    EXPECT_EQ(m.image_width(), 2);
}

TEST(Ggw1, BadMagic) {
    auto bytes = serialize_model(dense_tanh_model());
    bytes[0] = 'X';
    EXPECT_THROW(parse_model(bytes), MagicError);
}

TEST(Ggw1, ShortPayloadIsLengthError) {
    auto bytes = serialize_model(dense_tanh_model());
    std::uint32_t header_len = 0;
    std::memcpy(&header_len, bytes.data() + 4, 4);
    bytes.resize(8 + header_len + 15 * 4);
    EXPECT_THROW(parse_model(bytes), LengthError);
}

TEST(Ggw1, TrailingBytesAreLengthError) {
    auto bytes = serialize_model(dense_tanh_model());
    bytes.push_back(0);
    EXPECT_THROW(parse_model(bytes), LengthError);
}

TEST(Ggw1, ShapeMismatchIsShapeError) {
    DenseLayer a;
    a.in = 3;
    a.out = 5;
    a.weight = RowMajorMatrix::Zero(3, 5);
    a.bias = Vector::Zero(5);
    DenseLayer b;
    b.in = 4;
    b.out = 4;
    b.weight = RowMajorMatrix::Zero(4, 4);
    b.bias = Vector::Zero(4);
    EXPECT_THROW(GeneratorModel(3, {a, b}), ShapeError);
}

TEST(Ggw1, RoundTripIsBitExact) {
    TempDir dir;
    const auto model = fixture_model(7, 10, 8);
    save_model(model, dir / "a.ggw1");
    const auto loaded = load_model(dir / "a.ggw1");
    save_model(loaded, dir / "b.ggw1");
    EXPECT_EQ(read_file(dir / "a.ggw1"), read_file(dir / "b.ggw1"));
    const Vector z = random_latent(10, 3);
    EXPECT_EQ(forward_flat(model, z), forward_flat(loaded, z));
}

TEST(Ggw1, CommittedFixtureLoads) {
    const auto model = load_model(std::filesystem::path(SPECKLE_CS_TEST_DATA) / "fixture_model.ggw1");
    EXPECT_EQ(model.latent_dim(), 100);
    EXPECT_EQ(model.image_width(), 28);
    EXPECT_EQ(model.image_height(), 28);
    const Vector z = random_latent(100, 1);
    EXPECT_EQ(forward_flat(model, z), forward_flat(fixture_model(), z));
}

TEST(Forward, ZeroWeightsGiveZero) {
    const auto model = default_architecture(100, 8);
    const GrayImage g = forward(model, random_latent(100, 4));
    EXPECT_EQ(g.width(), 28);
    for (double v : g.pixels()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, HandComputedScatter) {
    DenseLayer d;
    d.in = 2;
    d.out = 4;
    d.weight.resize(2, 4);
    d.weight << 1, 0, 2, 0, 0, 1, 0, -1;
    d.bias = Vector::Zero(4);
    d.bias[0] = 0.5;
    ConvTransposeLayer c;
    c.in_channels = 1;
    c.out_channels = 1;
    c.kernel = 2;
    c.stride = 2;
    c.weight = {1, 2, 3, 4};
    const GeneratorModel model(2, {d, ReshapeLayer{{2, 2, 1}}, c});
    Vector z(2);
    z << 1, 2;
    // dense: (1.5, 2, 2, -2); each input pixel stamps its value times [[1,2],[3,4]].
    const double expected[16] = {1.5, 3, 2, 4, 4.5, 6, 6, 8, 2, 4, -2, -4, 6, 8, -6, -8};
    const Vector out = forward_flat(model, z);
    ASSERT_EQ(out.size(), 16);
    for (int i = 0; i < 16; ++i) EXPECT_DOUBLE_EQ(out[i], expected[i]) << i;
}

TEST(Forward, ConvTransposeMatchesScatterOracle) {
    for (auto [k, s] : {std::pair{5, 2}, std::pair{5, 1}, std::pair{3, 1}, std::pair{4, 2}, std::pair{2, 2}}) {
        const auto l = random_conv(3, 2, k, s, 10 + k * 7 + s);
        const TensorShape in{4, 5, 3};
        const Vector x = gaussian_vector(in.size(), 99);
        const Vector out = apply_layer(l, in, x);
        ASSERT_EQ(out.size(), in.height * s * in.width * s * 2) << "shape law k=" << k << " s=" << s;
        EXPECT_LT((out - scatter_oracle(l, in, x)).cwiseAbs().maxCoeff(), 1e-12) << "k=" << k << " s=" << s;
    }
}

TEST(Forward, RangeAndDeterminism) {
    const auto model = fixture_model();
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Vector z = random_latent(100, s);
        const Vector g = forward_flat(model, z);
        EXPECT_LT(g.cwiseAbs().maxCoeff(), 1.0);
        EXPECT_EQ(g, forward_flat(model, z));
    }
}

TEST(Forward, NonFiniteNamesLayer) {
    DenseLayer d;
    d.in = 2;
    d.out = 4;
    d.weight = RowMajorMatrix::Zero(2, 4);
    d.weight(0, 0) = std::nan("");
    d.bias = Vector::Zero(4);
    const GeneratorModel model(2, {d, TanhLayer{}});
    try {
        forward_flat(model, Vector::Ones(2));
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("dense"), std::string::npos);
    }
}

TEST(Forward, MeasurementDomainMap) {
    Vector g(3);
    g << -1, 1, 0;
    const Vector m = to_measurement_domain(g);
    EXPECT_EQ(m[0], 0.0);
    EXPECT_EQ(m[1], 1.0);
    EXPECT_EQ(m[2], 0.5);
}

TEST(Adjoint, DotProductForEveryLayerType) {
    const Vector u_seed = gaussian_vector(1000, 1);
    auto check = [](const Layer& layer, const TensorShape& in, const TensorShape& out, const Vector& x,
                    const Vector& jacobian_diag) {
        const Vector du = gaussian_vector(in.size(), 5);
        const Vector v = gaussian_vector(out.size(), 6);
        Vector jdu;
        if (jacobian_diag.size() > 0) {
            jdu = jacobian_diag.cwiseProduct(du);
        } else {
            jdu = apply_layer(layer, in, du);
        }
        const Vector jtv = apply_layer_adjoint(layer, in, x, v);
        EXPECT_NEAR(jdu.dot(v), du.dot(jtv), 1e-10 * std::max(1.0, std::abs(jdu.dot(v)))) << layer_kind(layer);
    };
    DenseLayer d;
    d.in = 7;
    d.out = 12;
    d.weight = gaussian_matrix(7, 12, 2);
    d.bias = Vector::Zero(12);
    check(d, {1, 1, 7}, {1, 1, 12}, gaussian_vector(7, 3), Vector());

    check(ReshapeLayer{{2, 2, 3}}, {1, 1, 12}, {2, 2, 3}, gaussian_vector(12, 3), Vector());

    for (auto [k, s] : {std::pair{5, 2}, std::pair{5, 1}, std::pair{2, 2}}) {
        const auto c = random_conv(3, 4, k, s, 20 + k + s);
        check(c, {3, 4, 3}, {3 * s, 4 * s, 4}, gaussian_vector(36, 4), Vector());
    }

    AffineChannelLayer a{gaussian_vector(3, 7), Vector::Zero(3)};
    check(a, {2, 2, 3}, {2, 2, 3}, gaussian_vector(12, 8), Vector());

    const Vector x = gaussian_vector(20, 9);
    Vector leaky_diag(20), tanh_diag(20);
    for (int i = 0; i < 20; ++i) {
        leaky_diag[i] = x[i] > 0 ? 1.0 : 0.3;
        tanh_diag[i] = 1.0 - std::tanh(x[i]) * std::tanh(x[i]);
    }
    check(LeakyReluLayer{0.3}, {1, 1, 20}, {1, 1, 20}, x, leaky_diag);
    check(TanhLayer{}, {1, 1, 20}, {1, 1, 20}, x, tanh_diag);
    (void)u_seed;
}

TEST(Gradient, ZeroAtRealizableTarget) {
    const auto model = fixture_model();
    const Vector z = random_latent(100, 11);
    const RowMajorMatrix a = gaussian_matrix(50, 784, 12);
    const Vector y = a * to_measurement_domain(forward_flat(model, z));
    const auto lg = loss_and_gradient(model, z, a, y);
    EXPECT_LT(lg.loss, 1e-10);
    EXPECT_LT(lg.gradient.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Gradient, MatchesCentralFiniteDifferences) {
    const auto model = fixture_model();
    const RowMajorMatrix a = gaussian_matrix(60, 784, 13);
    const Vector y = gaussian_vector(60, 14).cwiseAbs() * 10.0;
    const Vector z = random_latent(100, 15);
    const Vector g = loss_and_gradient(model, z, a, y).gradient;
    const double h = 1e-5;
    for (int i = 0; i < 100; i += 5) {
        Vector zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        const double fd =
            (loss_and_gradient(model, zp, a, y).loss - loss_and_gradient(model, zm, a, y).loss) / (2 * h);
        EXPECT_LT(relative_error(g[i], fd), 1e-5) << "coordinate " << i << " analytic " << g[i] << " fd " << fd;
    }
}

TEST(Gradient, LinearModelExplicitMatrices) {
    DenseLayer d;
    d.in = 3;
    d.out = 4;
    d.weight = gaussian_matrix(3, 4, 21);
    d.bias = gaussian_vector(4, 22);
    const GeneratorModel model(3, {d});
    const RowMajorMatrix a = gaussian_matrix(5, 4, 23);
    const Vector y = gaussian_vector(5, 24);
    const Vector z = gaussian_vector(3, 25);
    // Effective affine map z -> J z + c in measurement space.
    const Eigen::MatrixXd j = 0.5 * a * d.weight.transpose();
    const Vector c = 0.5 * a * (d.bias + Vector::Ones(4));
    const Vector expected = 2.0 * j.transpose() * (j * z + c - y);
    const auto lg = loss_and_gradient(model, z, a, y);
    EXPECT_LT((lg.gradient - expected).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(lg.loss, (j * z + c - y).squaredNorm(), 1e-10);
}

TEST(Adam, ZeroGradientKeepsParameters) {
    AdamState st(AdamConfig{}, 4);
    Vector p = gaussian_vector(4, 1);
    const Vector before = p;
    adam_step(st, p, Vector::Zero(4));
    EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepIsSignedLearningRate) {
    AdamState st(AdamConfig{}, 5);
    Vector p = Vector::Zero(5);
    Vector g(5);
    g << 3, -0.5, 100, -0.05, 7;
    adam_step(st, p, g);
    for (int i = 0; i < 5; ++i) {
        const double sign = g[i] > 0 ? 1.0 : -1.0;
        EXPECT_LT(std::abs(p[i] + 0.1 * sign), 0.1 * 1e-6);
    }
}

TEST(Adam, FiftyStepsMatchReference) {
    const AdamConfig cfg{0.05, 0.8, 0.99, 1e-7};
    const int n = 6;
    AdamState st(cfg, n);
    Vector p = gaussian_vector(n, 31);
    std::vector<double> rp(p.data(), p.data() + n), rm(n, 0.0), rv(n, 0.0);
    for (int t = 1; t <= 50; ++t) {
        // Gradient of sum(p^4)/4 - p, evaluated at the current parameters.
        Vector g(n);
        std::vector<double> rg(n);
        for (int i = 0; i < n; ++i) {
            g[i] = p[i] * p[i] * p[i] - 1.0;
            rg[i] = rp[i] * rp[i] * rp[i] - 1.0;
        }
        adam_step(st, p, g);
        for (int i = 0; i < n; ++i) {
            rm[i] = cfg.beta1 * rm[i] + (1 - cfg.beta1) * rg[i];
            rv[i] = cfg.beta2 * rv[i] + (1 - cfg.beta2) * rg[i] * rg[i];
            const double mh = rm[i] / (1 - std::pow(cfg.beta1, t));
            const double vh = rv[i] / (1 - std::pow(cfg.beta2, t));
            rp[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.epsilon);
        }
    }
    for (int i = 0; i < n; ++i) EXPECT_LT(std::abs(p[i] - rp[i]), 1e-12);
}
