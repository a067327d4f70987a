#include "adiff/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace adiff {

namespace rng {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void normal_pair(std::uint64_t seed, std::uint64_t index, double& z0, double& z1) {
    const std::uint64_t h = mix64(seed ^ mix64(index));
    const std::uint64_t b1 = h;
    const std::uint64_t b2 = mix64(h);
    // u1 in (0, 1] so the log is finite; u2 in [0, 1).
    const double u1 = static_cast<double>((b1 >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(b2 >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    z0 = r * std::cos(a);
    z1 = r * std::sin(a);
}

}  // namespace rng

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    return rng::mix64(seed + rng::mix64(salt));
}

namespace {

double checked_sigma(const Volume& v, const NoiseSpec& spec, NoiseModel expected) {
    if (spec.model != expected) throw std::invalid_argument("noise: spec.model does not match the call");
    if (!(spec.level > 0.0 && spec.level <= 1.0))
        throw std::invalid_argument("noise: level must lie in (0, 1]");
    return spec.level * max_intensity(v);
}

}  // namespace

Volume add_gaussian(const Volume& v, const NoiseSpec& spec) {
    const double sigma = checked_sigma(v, spec, NoiseModel::gaussian);
    Volume out = v;
    if (sigma == 0.0) return out;  // e.g. an all-zero image
    const long long n = static_cast<long long>(v.size());
#pragma omp parallel for schedule(static) if (n >= 1 << 14)
    for (long long i = 0; i < n; ++i) {
        double z0 = 0.0, z1 = 0.0;
        rng::normal_pair(spec.seed, static_cast<std::uint64_t>(i), z0, z1);
        out.data[static_cast<std::size_t>(i)] = v.data[static_cast<std::size_t>(i)] + sigma * z0;
    }
    return out;
}

Volume add_rician(const Volume& v, const NoiseSpec& spec) {
    const double sigma = checked_sigma(v, spec, NoiseModel::rician);
    for (const double x : v.data)
        if (x < 0.0) throw std::invalid_argument("add_rician: input must be non-negative (magnitude image)");
    Volume out = v;
    if (sigma == 0.0) return out;
    const long long n = static_cast<long long>(v.size());
#pragma omp parallel for schedule(static) if (n >= 1 << 14)
    for (long long i = 0; i < n; ++i) {
        double z0 = 0.0, z1 = 0.0;
        rng::normal_pair(spec.seed, static_cast<std::uint64_t>(i), z0, z1);
        const double re = v.data[static_cast<std::size_t>(i)] + sigma * z0;
        const double im = sigma * z1;
        out.data[static_cast<std::size_t>(i)] = std::sqrt(re * re + im * im);
    }
    return out;
}

Volume add_noise(const Volume& v, const NoiseSpec& spec) {
    return spec.model == NoiseModel::gaussian ? add_gaussian(v, spec) : add_rician(v, spec);
}

}  // namespace adiff
