#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "adiff/volume.hpp"

namespace testutil {

inline adiff::Volume random_image(int nx, int ny, std::mt19937_64& rng, double lo = 0.0,
                                  double hi = 100.0) {
    adiff::Volume v(nx, ny);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& x : v.data) x = dist(rng);
    return v;
}

inline adiff::Volume random_volume(int nx, int ny, int nz, std::mt19937_64& rng, double lo = 0.0,
                                   double hi = 100.0) {
    adiff::Volume v(nx, ny, nz);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& x : v.data) x = dist(rng);
    return v;
}

/// Integer-valued image; sums and differences of its pixels are exact in
/// double arithmetic, which keeps tie-sensitive tests deterministic.
inline adiff::Volume random_integer_image(int nx, int ny, std::mt19937_64& rng, int lo = 0,
                                          int hi = 100) {
    adiff::Volume v(nx, ny);
    std::uniform_int_distribution<int> dist(lo, hi);
    for (double& x : v.data) x = static_cast<double>(dist(rng));
    return v;
}

inline double max_abs_diff(const adiff::Volume& a, const adiff::Volume& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

/// Relative error with a floor of 1 in the denominator, suitable for
/// intensities of order 1..100.
inline double max_rel_diff(const adiff::Volume& a, const adiff::Volume& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double den = std::max({std::abs(a.data[i]), std::abs(b.data[i]), 1.0});
        m = std::max(m, std::abs(a.data[i] - b.data[i]) / den);
    }
    return m;
}

inline std::filesystem::path test_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("adiff_tests_" + name);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace testutil
