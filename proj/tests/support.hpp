#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "speckle_cs/image.hpp"
#include "speckle_cs/rng.hpp"

namespace testing_support {

using speckle_cs::RowMajorMatrix;
using speckle_cs::Vector;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("speckle_cs_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline RowMajorMatrix gaussian_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n;
    RowMajorMatrix a(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) a(i, j) = n(gen);
    return a;
}

inline Vector gaussian_vector(int size, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n;
    Vector v(size);
    for (int i = 0; i < size; ++i) v[i] = n(gen);
    return v;
}

/// k-sparse vector with distinct random support and N(0,1) amplitudes bounded away from 0.
inline Vector sparse_vector(int size, int k, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n;
    Vector x = Vector::Zero(size);
    int placed = 0;
    while (placed < k) {
        const int idx = static_cast<int>(gen() % static_cast<std::uint64_t>(size));
        if (x[idx] != 0.0) continue;
        double v = n(gen);
        x[idx] = v + (v >= 0 ? 0.5 : -0.5);
        ++placed;
    }
    return x;
}

}  // namespace testing_support
