#pragma once

#include "adiff/volume.hpp"

namespace adiff {

/// Full-reference quality metrics between two same-shaped volumes. All
/// statistics are population statistics computed globally over the whole
/// image (no windowing), accumulated serially so results are reproducible.
struct MetricsReport {
    double mse = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    double iqi = 0.0;
};

/// Mean squared difference. Throws std::invalid_argument on shape mismatch.
double mse(const Volume& i, const Volume& j);

/// 20*log10(max(I_max, J_max)) - 10*log10(MSE), base-10 logs. Identical
/// images (MSE = 0) yield +inf rather than an error.
double psnr(const Volume& i, const Volume& j);

/// Global structural similarity
///   (2*mu_i*mu_j + c1)(2*cov + c2) / ((mu_i^2+mu_j^2+c1)(var_i+var_j+c2))
/// with c1 = 0.0001*N*N and c2 = 0.0009*N*N for pixel count N. The constants
/// scale with the pixel count, which saturates the score toward 1 on large
/// images; that is the intended behavior of this variant.
double ssim(const Volume& i, const Volume& j);

/// Image quality index 4*mu_i*mu_j*cov / ((mu_i^2+mu_j^2)(var_i+var_j)).
/// Degenerate pairs (zero denominator: both images constant, or both
/// zero-mean) yield NaN as the undefined-metric sentinel.
double iqi(const Volume& i, const Volume& j);

MetricsReport compute_metrics(const Volume& i, const Volume& j);

}  // namespace adiff
