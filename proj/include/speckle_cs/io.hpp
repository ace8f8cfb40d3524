#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "speckle_cs/forward_model.hpp"
#include "speckle_cs/gan_recon.hpp"
#include "speckle_cs/image.hpp"
#include "speckle_cs/l1_solver.hpp"

namespace speckle_cs {

// Raw arrays are stored as `<stem>.f64` (little-endian float64, row-major) next to a
// one-line JSON sidecar `<stem>.json` that carries at least {"shape": [...]}.

void write_f64(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_f64(const std::filesystem::path& path);

void write_sidecar(const std::filesystem::path& path, const nlohmann::json& meta);
nlohmann::json read_sidecar(const std::filesystem::path& path);

std::filesystem::path data_path(const std::filesystem::path& stem);
std::filesystem::path sidecar_path(const std::filesystem::path& stem);

/// Speckle stack: shape [count, N, N] with seed and cutoff in the sidecar.
void save_speckle_stack(const std::filesystem::path& stem, const std::vector<GrayImage>& patterns,
                        std::uint64_t seed, double cutoff);
std::vector<GrayImage> load_speckle_stack(const std::filesystem::path& stem);

void save_matrix(const std::filesystem::path& stem, const MeasurementMatrix& a, nlohmann::json extra = {});
MeasurementMatrix load_matrix(const std::filesystem::path& stem);

void save_signal(const std::filesystem::path& stem, const BucketSignal& y, nlohmann::json extra = {});
BucketSignal load_signal(const std::filesystem::path& stem);
void write_signal_csv(const std::filesystem::path& path, const BucketSignal& y);

/// Binary (P5) or ASCII (P2) graymap, scaled to [0,1] by maxval.
GrayImage read_pgm(const std::filesystem::path& path);
/// 8-bit P5 graymap; values are clipped to [0,1].
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
/// 8-bit grayscale PNG; values are clipped to [0,1].
void write_png(const std::filesystem::path& path, const GrayImage& image);

std::string base64_encode(std::span<const unsigned char> bytes);
std::vector<unsigned char> base64_decode(const std::string& text);

/// Little-endian float64 payload, base64-encoded.
std::string encode_vector(const Vector& v);
Vector decode_vector(const std::string& text);

nlohmann::json to_json(const SolveReport& report);
SolveReport solve_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReconResult& result);

/// Writes `text` to `path` atomically (temp file + rename).
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace speckle_cs
