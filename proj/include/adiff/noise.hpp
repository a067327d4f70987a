#pragma once

#include <cstdint>

#include "adiff/volume.hpp"

namespace adiff {

enum class NoiseModel { gaussian, rician };

/// Noise amplitude is relative: sigma = level * max_intensity(input).
struct NoiseSpec {
    NoiseModel model = NoiseModel::gaussian;
    double level = 0.0;  ///< fraction of the input maximum, in (0, 1]
    std::uint64_t seed = 0;
};

/// Counter-based pseudo-random stream: every pixel's variates are a pure
/// function of (seed, linear pixel index), built from the splitmix64
/// finalizer and a Box-Muller transform. Generation is therefore
/// order-independent — parallel runs are bit-identical to serial runs on any
/// thread count — and the stream is platform-stable. The exact construction
/// is documented in the README and is part of the reproducibility contract.
namespace rng {

/// splitmix64 step: add the golden-gamma constant, then finalize.
std::uint64_t mix64(std::uint64_t z);

/// The two standard normal variates attached to (seed, index).
void normal_pair(std::uint64_t seed, std::uint64_t index, double& z0, double& z1);

}  // namespace rng

/// Stable sub-seed for a named purpose (e.g. one per sweep noise level).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

/// output = input + N(0, sigma^2) per pixel. Output is not clamped.
Volume add_gaussian(const Volume& v, const NoiseSpec& spec);

/// output_s = sqrt((input_s + n1)^2 + n2^2) with independent n1, n2
/// ~ N(0, sigma^2). Requires a non-negative input (magnitude image).
Volume add_rician(const Volume& v, const NoiseSpec& spec);

/// Dispatch on spec.model.
Volume add_noise(const Volume& v, const NoiseSpec& spec);

}  // namespace adiff
