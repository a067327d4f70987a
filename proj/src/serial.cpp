#include "adiff/serial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace adiff::serial {

Volume median_filter(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp) {
    Volume out = v;
    for (std::size_t s = 0; s < v.size(); ++s) {
        std::vector<double> vals{v.data[s]};
        for (const auto& [q, d] : neighbors(v, s, adj, bp)) vals.push_back(v.data[q]);
        std::sort(vals.begin(), vals.end());
        const std::size_t n = vals.size();
        out.data[s] = (n % 2 == 1) ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    }
    return out;
}

Volume directional_gradient_sum(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp) {
    Volume out = v;
    for (std::size_t s = 0; s < v.size(); ++s) {
        double g = 0.0;
        for (const auto& [q, d] : neighbors(v, s, adj, bp)) g += v.data[s] - v.data[q];
        out.data[s] = g;
    }
    return out;
}

double estimate_sigma_gs(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp,
                         double top_fraction) {
    const Volume g = serial::directional_gradient_sum(v, adj, bp);
    std::vector<double> mags;
    mags.reserve(g.size());
    for (const double x : g.data) mags.push_back(std::abs(x));

    std::vector<double> sorted = mags;
    std::sort(sorted.begin(), sorted.end(), [](double a, double b) { return a > b; });
    std::size_t k = static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(sorted.size())));
    k = std::clamp<std::size_t>(k, 1, sorted.size());
    const double cutoff = sorted[k - 1];

    std::vector<double> top;
    for (const double m : mags)
        if (m >= cutoff) top.push_back(m);
    double mean = 0.0;
    for (const double m : top) mean += m;
    mean /= static_cast<double>(top.size());
    double var = 0.0;
    for (const double m : top) var += (m - mean) * (m - mean);
    var /= static_cast<double>(top.size());
    return std::sqrt(var);
}

Volume adf_step(const Volume& v, const FilterParams& p, double gamma_t) {
    Volume out = v;
    for (std::size_t s = 0; s < v.size(); ++s) {
        const auto nb = neighbors(v, s, p.adjacency, p.boundary);
        if (nb.empty()) continue;
        double acc = 0.0;
        for (const auto& [q, d] : nb) {
            const double grad = v.data[q] - v.data[s];
            acc += tukey(grad, gamma_t) * grad;
        }
        out.data[s] = v.data[s] + p.lambda / static_cast<double>(nb.size()) * acc;
    }
    return out;
}

Volume wadf_step(const Volume& v, const FilterParams& p, double gamma_t) {
    Volume out = v;
    for (std::size_t s = 0; s < v.size(); ++s) {
        const auto nb = neighbors(v, s, p.adjacency, p.boundary);
        if (nb.empty()) continue;
        double acc = 0.0;
        for (const auto& [q, d] : nb) {
            const double grad = v.data[q] - v.data[s];
            acc += tukey(grad, gamma_t) / d * grad;
        }
        out.data[s] = v.data[s] + acc / static_cast<double>(nb.size());
    }
    return out;
}

Volume nlwadf_step(const Volume& v, const NonLocalLinks& links, const FilterParams& p, double gamma_t) {
    Volume out = v;
    for (std::size_t s = 0; s < v.size(); ++s) {
        const auto nb = neighbors(v, s, p.adjacency, p.boundary);
        const auto ls = links.links_of(s);
        const std::size_t n = nb.size() + ls.size();
        if (n == 0) continue;
        double acc = 0.0;
        for (const auto& [q, d] : nb) {
            const double grad = v.data[q] - v.data[s];
            acc += tukey(grad, gamma_t) / d * grad;
        }
        for (const std::uint32_t q : ls) {
            const double grad = v.data[q] - v.data[s];
            acc += tukey(grad, gamma_t) / links.distance * grad;
        }
        out.data[s] = v.data[s] + acc / static_cast<double>(n);
    }
    return out;
}

namespace {

int wrap(int c, int n) { return (c % n + n) % n; }

}  // namespace

double patch_ssd(const Volume& guide, std::size_t a, std::size_t b, const PatchShape& patch,
                 BoundaryPolicy bp) {
    int ax, ay, az, bx, by, bz;
    guide.coords(a, ax, ay, az);
    guide.coords(b, bx, by, bz);
    double sum = 0.0;
    int cnt = 0;
    for (const auto& o : patch.offsets) {
        int x1 = ax + o[0], y1 = ay + o[1], z1 = az + o[2];
        int x2 = bx + o[0], y2 = by + o[1], z2 = bz + o[2];
        if (bp == BoundaryPolicy::periodic) {
            x1 = wrap(x1, guide.dims[0]), y1 = wrap(y1, guide.dims[1]), z1 = wrap(z1, guide.dims[2]);
            x2 = wrap(x2, guide.dims[0]), y2 = wrap(y2, guide.dims[1]), z2 = wrap(z2, guide.dims[2]);
        } else {
            const auto in = [&](int x, int y, int z) {
                return x >= 0 && x < guide.dims[0] && y >= 0 && y < guide.dims[1] && z >= 0 &&
                       z < guide.dims[2];
            };
            if (!in(x1, y1, z1) || !in(x2, y2, z2)) continue;
        }
        const double d = guide.at(x1, y1, z1) - guide.at(x2, y2, z2);
        sum += d * d;
        ++cnt;
    }
    return cnt == 0 ? std::numeric_limits<double>::infinity() : sum / static_cast<double>(cnt);
}

NonLocalLinks build_links(const Volume& v, const NonLocalConfig& cfg, const AdjacencyRelation& adj,
                          BoundaryPolicy bp) {
    NonLocalLinks links;
    links.distance = cfg.patch_distance;
    links.stride = cfg.num_patches;
    links.counts.assign(v.size(), 0);
    if (cfg.num_patches == 0) return links;
    links.partners.assign(v.size() * static_cast<std::size_t>(cfg.num_patches), 0);

    const Volume guide = cfg.guide == GuideMode::median_prefilter ? serial::median_filter(v, adj, bp) : v;
    for (std::size_t s = 0; s < v.size(); ++s) {
        int sx, sy, sz;
        v.coords(s, sx, sy, sz);
        // Exhaustive search: every other pixel of the grid is a candidate.
        std::vector<std::tuple<double, double, std::size_t>> cands;
        for (std::size_t q = 0; q < v.size(); ++q) {
            if (q == s) continue;
            int qx, qy, qz;
            v.coords(q, qx, qy, qz);
            const double dx = qx - sx, dy = qy - sy, dz = qz - sz;
            const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
            if (dist > cfg.search_radius) continue;
            cands.emplace_back(serial::patch_ssd(guide, s, q, cfg.patch_shape, bp), dist, q);
        }
        std::sort(cands.begin(), cands.end());
        const std::size_t keep = std::min<std::size_t>(cands.size(), static_cast<std::size_t>(cfg.num_patches));
        links.counts[s] = static_cast<std::int32_t>(keep);
        for (std::size_t j = 0; j < keep; ++j)
            links.partners[s * static_cast<std::size_t>(cfg.num_patches) + j] =
                static_cast<std::uint32_t>(std::get<2>(cands[j]));
    }
    return links;
}

}  // namespace adiff::serial
