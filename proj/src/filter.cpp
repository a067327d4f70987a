#include "adiff/filter.hpp"

#include <cmath>
#include <stdexcept>

#include "run_schedule.hpp"
#include "stencil.hpp"

namespace adiff {

namespace {

// Both explicit schemes share this kernel; weighted mode divides each flux
// by the neighbor distance and pins the step size to 1.
Volume diffusion_step(const Volume& v, const FilterParams& p, double gamma_t, bool distance_weighted,
                      double lambda) {
    if (p.adjacency.naxes != v.naxes)
        throw std::invalid_argument("diffusion step: adjacency dimensionality does not match volume");
    if (!(gamma_t > 0.0)) throw std::invalid_argument("diffusion step: gamma must be positive");

    Volume out = v;
    const double* in = v.data.data();
    double* res = out.data.data();
    detail::stencil_apply(v, p.adjacency, p.boundary,
                          [&](std::size_t s, const std::size_t* idx, const double* dist, int cnt) {
                              if (cnt == 0) return;  // 1x1 image under count_in_bounds
                              double flux = 0.0;
                              for (int k = 0; k < cnt; ++k) {
                                  const double grad = in[idx[k]] - in[s];
                                  double w = detail::tukey_unchecked(grad, gamma_t);
                                  if (distance_weighted) w /= dist[k];
                                  flux += w * grad;
                              }
                              // same operation shape as nlwadf_step so the #P = 0
                              // degenerate case reduces to this bit-for-bit
                              res[s] = in[s] + lambda * (flux / static_cast<double>(cnt));
                          });
    return out;
}

}  // namespace

Volume adf_step(const Volume& v, const FilterParams& p, double gamma_t) {
    return diffusion_step(v, p, gamma_t, false, p.lambda);
}

Volume wadf_step(const Volume& v, const FilterParams& p, double gamma_t) {
    return diffusion_step(v, p, gamma_t, true, 1.0);
}

std::pair<Volume, FilterRunReport> run_filter(const Volume& v, const FilterParams& p) {
    detail::validate_schedule(v, p);
    if (p.variant == FilterVariant::adf) {
        const double cap = lambda_max(p.adjacency.naxes, static_cast<int>(p.adjacency.size()));
        if (!(p.lambda > 0.0 && p.lambda <= cap))
            throw std::invalid_argument("run_filter: adf lambda must lie in (0, lambda_max]");
        return detail::run_schedule(v, p, [&p](const Volume& cur, double g) { return adf_step(cur, p, g); });
    }
    return detail::run_schedule(v, p, [&p](const Volume& cur, double g) { return wadf_step(cur, p, g); });
}

}  // namespace adiff
