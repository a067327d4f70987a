#pragma once

#include "adiff/volume.hpp"

namespace adiff {

/// Half-width of the Tukey kernel support, in units of gamma.
inline constexpr double kTukeySupport = 2.23606797749978969;  // sqrt(5)

namespace detail {

/// Tukey biweight without the gamma > 0 check, for hot loops.
inline double tukey_unchecked(double grad, double gamma) {
    const double a = grad < 0 ? -grad : grad;
    const double lim = kTukeySupport * gamma;
    if (a > lim) return 0.0;
    const double u = a / lim;
    const double t = 1.0 - u * u;
    return t * t;
}

}  // namespace detail

/// Tukey biweight edge-stopping function: [1 - (|grad| / (gamma*sqrt(5)))^2]^2
/// inside the support |grad| <= gamma*sqrt(5), exactly 0 outside. Throws
/// std::invalid_argument if gamma <= 0.
double tukey(double grad, double gamma);

/// Per-pixel sum of directional gradients, G_s = sum_p (I_s - I_p) over the
/// neighborhood. Note the sign: this accumulates I_s - I_p, the negation of
/// the gradients that drive the diffusion update.
Volume directional_gradient_sum(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp);

/// Population standard deviation of |G_s| taken over the ceil(f*N) pixels
/// with the largest |G_s| (ties at the cutoff value are all included, so the
/// result is independent of sort order). top_fraction must lie in (0, 1].
double estimate_sigma_gs(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp,
                         double top_fraction = 0.05);

/// Contrast-threshold schedule: gamma^0 = conservativeness * sigma_Gs, then
/// gamma^t = retention * gamma^(t-1). Iteration stops once
/// gamma^t <= stop_fraction * max_intensity(original input).
struct GammaSchedule {
    double gamma0 = 0.0;
    double retention = 0.8;      // in (0, 1)
    double stop_fraction = 0.01;
};

bool should_stop(double gamma_t, double max_intensity, double stop_fraction);

/// Largest stable explicit step size for the classic diffusion update with
/// the given neighborhood. Throws std::invalid_argument for unsupported
/// combinations.
double lambda_max(int num_axes, int adjacency_size);

}  // namespace adiff
