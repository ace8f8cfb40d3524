#include <fstream>

#include <gtest/gtest.h>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/io.hpp"
#include "support.hpp"

using namespace speckle_cs;
using testing_support::gaussian_vector;
using testing_support::TempDir;

TEST(Io, Float64RoundTrip) {
    TempDir dir;
    const Vector v = gaussian_vector(17, 1);
    write_f64(dir / "v.f64", {v.data(), static_cast<std::size_t>(v.size())});
    const auto back = read_f64(dir / "v.f64");
    ASSERT_EQ(back.size(), 17u);
    for (int i = 0; i < 17; ++i) EXPECT_EQ(back[static_cast<std::size_t>(i)], v[i]);
}

TEST(Io, MatrixAndSignalRoundTrip) {
    TempDir dir;
    const auto a = build_matrix(6, {28, 0.4, 3});
    save_matrix(dir / "A", a);
    const auto loaded = load_matrix(dir / "A");
    EXPECT_EQ(loaded.values, a.values);
    EXPECT_EQ(loaded.row_seeds, a.row_seeds);
    BucketSignal y{gaussian_vector(6, 2)};
    save_signal(dir / "y", y);
    EXPECT_EQ(load_signal(dir / "y").values, y.values);
    write_signal_csv(dir / "y.csv", y);
    std::ifstream in(dir / "y.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "index,y");
}

TEST(Io, SpeckleStackRoundTrip) {
    TempDir dir;
    std::vector<GrayImage> patterns;
    for (std::uint64_t s = 0; s < 3; ++s) patterns.push_back(generate_speckle({28, 0.2, s}));
    save_speckle_stack(dir / "stack", patterns, 9, 0.2);
    EXPECT_EQ(load_speckle_stack(dir / "stack"), patterns);
    const auto meta = read_sidecar(sidecar_path(dir / "stack"));
    EXPECT_EQ(meta.at("shape"), nlohmann::json({3, 28, 28}));
    EXPECT_EQ(meta.at("seed"), 9);
}

TEST(Io, TruncatedPayloadRejected) {
    TempDir dir;
    const auto a = build_matrix(2, {28, 0.4, 3});
    save_matrix(dir / "A", a);
    std::filesystem::resize_file(data_path(dir / "A"), 8 * 100);
    EXPECT_THROW(load_matrix(dir / "A"), LengthError);
}

TEST(Io, PgmRoundTripAndAscii) {
    TempDir dir;
    GrayImage img(3, 2, 0.0);
    img.at(0, 0) = 1.0;
    img.at(1, 2) = 0.5;
    img.at(0, 1) = -3.0;
    write_pgm(dir / "a.pgm", img);
    const GrayImage back = read_pgm(dir / "a.pgm");
    EXPECT_EQ(back.at(0, 0), 1.0);
    EXPECT_EQ(back.at(0, 1), 0.0);
    EXPECT_NEAR(back.at(1, 2), 128.0 / 255.0, 1e-12);
    std::ofstream(dir / "b.pgm") << "P2\n# comment\n2 1\n10\n0 10\n";
    const GrayImage ascii = read_pgm(dir / "b.pgm");
    EXPECT_EQ(ascii.at(0, 1), 1.0);
    std::ofstream(dir / "c.pgm") << "P7\n";
    EXPECT_THROW(read_pgm(dir / "c.pgm"), MagicError);
}

TEST(Io, PngHasSignature) {
    TempDir dir;
    write_png(dir / "a.png", GrayImage(4, 4, 0.5));
    std::ifstream in(dir / "a.png", std::ios::binary);
    unsigned char sig[8];
    in.read(reinterpret_cast<char*>(sig), 8);
    EXPECT_EQ(sig[1], 'P');
    EXPECT_EQ(sig[2], 'N');
    EXPECT_EQ(sig[3], 'G');
}

TEST(Io, Base64AndVectorEncoding) {
    const std::vector<unsigned char> bytes{'M', 'a', 'n', 'y'};
    EXPECT_EQ(base64_encode(bytes), "TWFueQ==");
    EXPECT_EQ(base64_decode("TWFueQ=="), bytes);
    const Vector v = gaussian_vector(9, 3);
    EXPECT_EQ(decode_vector(encode_vector(v)), v);
    EXPECT_THROW(base64_decode("abc"), FormatError);
}

TEST(Io, SolveReportJsonRoundTrip) {
    SolveReport r;
    r.solution = gaussian_vector(5, 4);
    r.residual_norm = 0.125;
    r.tau = 3.5;
    r.iterations = 42;
    r.converged = true;
    const auto back = solve_report_from_json(to_json(r));
    EXPECT_EQ(back.solution, r.solution);
    EXPECT_EQ(back.residual_norm, r.residual_norm);
    EXPECT_EQ(back.iterations, 42);
    EXPECT_TRUE(back.converged);
}
