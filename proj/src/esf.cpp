#include "adiff/esf.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "stencil.hpp"

namespace adiff {

double tukey(double grad, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("tukey: gamma must be positive");
    return detail::tukey_unchecked(grad, gamma);
}

Volume directional_gradient_sum(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp) {
    if (adj.naxes != v.naxes) throw std::invalid_argument("adjacency dimensionality does not match volume");
    Volume out = v;
    const double* in = v.data.data();
    double* res = out.data.data();
    detail::stencil_apply(v, adj, bp, [&](std::size_t s, const std::size_t* idx, const double*, int cnt) {
        double g = 0.0;
        for (int k = 0; k < cnt; ++k) g += in[s] - in[idx[k]];
        res[s] = g;
    });
    return out;
}

double estimate_sigma_gs(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp,
                         double top_fraction) {
    if (!(top_fraction > 0.0 && top_fraction <= 1.0))
        throw std::invalid_argument("estimate_sigma_gs: top_fraction must lie in (0, 1]");
    const Volume g = directional_gradient_sum(v, adj, bp);

    std::vector<double> mags(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) mags[i] = std::abs(g.data[i]);

    const std::size_t n = mags.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n);

    std::vector<double> ranked = mags;
    std::nth_element(ranked.begin(), ranked.begin() + (k - 1), ranked.end(), std::greater<double>());
    const double cutoff = ranked[k - 1];

    // Select by value, not by position, so ties at the cutoff are all kept
    // and the estimate does not depend on the order nth_element happened to
    // leave equal elements in.
    double sum = 0.0;
    std::size_t cnt = 0;
    for (const double m : mags)
        if (m >= cutoff) {
            sum += m;
            ++cnt;
        }
    const double mean = sum / static_cast<double>(cnt);
    double var = 0.0;
    for (const double m : mags)
        if (m >= cutoff) {
            const double d = m - mean;
            var += d * d;
        }
    var /= static_cast<double>(cnt);
    return std::sqrt(var);
}

bool should_stop(double gamma_t, double max_intensity, double stop_fraction) {
    return gamma_t <= stop_fraction * max_intensity;
}

double lambda_max(int num_axes, int adjacency_size) {
    if (num_axes == 2) {
        if (adjacency_size == 4) return 4.0 / 5.0;
        if (adjacency_size == 8) return 8.0 / 7.0;
    } else if (num_axes == 3) {
        if (adjacency_size == 6) return 6.0 / 7.0;
        if (adjacency_size == 18) return 18.0 / 13.0;
        if (adjacency_size == 26) return 78.0 / 47.0;
    }
    throw std::invalid_argument("lambda_max: unsupported adjacency: " + std::to_string(num_axes) +
                                " axes / " + std::to_string(adjacency_size) + " neighbors");
}

}  // namespace adiff
