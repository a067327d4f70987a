#include "adiff/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "run_schedule.hpp"
#include "stencil.hpp"

namespace adiff {

namespace {

struct Candidate {
    double ssd;
    double dist;
    std::uint32_t index;
};

bool better(const Candidate& a, const Candidate& b) {
    if (a.ssd != b.ssd) return a.ssd < b.ssd;
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.index < b.index;
}

// Shared core of patch_ssd and the link search: mean squared difference over
// the jointly valid offsets of the patches centered at (ax,ay,az)/(bx,by,bz).
double ssd_at(const Volume& g, int ax, int ay, int az, int bx, int by, int bz, const PatchShape& patch,
              BoundaryPolicy bp) {
    const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
    double sum = 0.0;
    int cnt = 0;
    for (const auto& o : patch.offsets) {
        int x1 = ax + o[0], y1 = ay + o[1], z1 = az + o[2];
        int x2 = bx + o[0], y2 = by + o[1], z2 = bz + o[2];
        if (bp == BoundaryPolicy::periodic) {
            x1 = detail::wrap_index(x1, nx);
            y1 = detail::wrap_index(y1, ny);
            z1 = detail::wrap_index(z1, nz);
            x2 = detail::wrap_index(x2, nx);
            y2 = detail::wrap_index(y2, ny);
            z2 = detail::wrap_index(z2, nz);
        } else if (x1 < 0 || x1 >= nx || y1 < 0 || y1 >= ny || z1 < 0 || z1 >= nz ||  //
                   x2 < 0 || x2 >= nx || y2 < 0 || y2 >= ny || z2 < 0 || z2 >= nz) {
            continue;
        }
        const double d = g.data[g.index(x1, y1, z1)] - g.data[g.index(x2, y2, z2)];
        sum += d * d;
        ++cnt;
    }
    if (cnt == 0) return std::numeric_limits<double>::infinity();
    return sum / static_cast<double>(cnt);
}

// All integer offsets with 0 < |o| <= radius, in (z, y, x)-lexicographic
// order; their Euclidean lengths ride along for the tie-breaking rule.
std::vector<std::pair<std::array<int, 3>, double>> ball_offsets(double radius, int num_axes) {
    const int r = static_cast<int>(std::floor(radius));
    const int zr = num_axes == 3 ? r : 0;
    std::vector<std::pair<std::array<int, 3>, double>> out;
    for (int dz = -zr; dz <= zr; ++dz)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                const double d2 = static_cast<double>(dx * dx + dy * dy + dz * dz);
                if (d2 == 0.0 || d2 > radius * radius) continue;
                out.push_back({{dx, dy, dz}, std::sqrt(d2)});
            }
    return out;
}

}  // namespace

PatchShape patch_offsets(double radius, int num_axes) {
    if (!(radius > 0.0)) throw std::invalid_argument("patch_offsets: radius must be positive");
    if (num_axes != 2 && num_axes != 3) throw std::invalid_argument("patch_offsets: num_axes must be 2 or 3");
    PatchShape shape;
    shape.radius = radius;
    shape.naxes = num_axes;
    const int r = static_cast<int>(std::floor(radius));
    const int zr = num_axes == 3 ? r : 0;
    for (int dz = -zr; dz <= zr; ++dz)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                const double d2 = static_cast<double>(dx * dx + dy * dy + dz * dz);
                if (d2 <= radius * radius) shape.offsets.push_back({dx, dy, dz});
            }
    return shape;
}

double patch_ssd(const Volume& guide, std::size_t a, std::size_t b, const PatchShape& patch,
                 BoundaryPolicy bp) {
    if (a >= guide.size() || b >= guide.size()) throw std::out_of_range("patch_ssd: pixel index out of range");
    int ax = 0, ay = 0, az = 0, bx = 0, by = 0, bz = 0;
    guide.coords(a, ax, ay, az);
    guide.coords(b, bx, by, bz);
    return ssd_at(guide, ax, ay, az, bx, by, bz, patch, bp);
}

NonLocalLinks build_links(const Volume& v, const NonLocalConfig& cfg, const AdjacencyRelation& adj,
                          BoundaryPolicy bp) {
    if (!(cfg.search_radius >= 1.0)) throw std::invalid_argument("build_links: search_radius must be >= 1");
    if (!(cfg.patch_distance > 0.0)) throw std::invalid_argument("build_links: patch_distance must be positive");
    if (cfg.num_patches < 0) throw std::invalid_argument("build_links: num_patches must be non-negative");

    NonLocalLinks links;
    links.distance = cfg.patch_distance;
    links.stride = cfg.num_patches;
    links.counts.assign(v.size(), 0);
    if (cfg.num_patches == 0) return links;

    if (cfg.patch_shape.offsets.empty())
        throw std::invalid_argument("build_links: patch_shape has no offsets (use patch_offsets)");
    if (cfg.patch_shape.naxes != v.naxes)
        throw std::invalid_argument("build_links: patch dimensionality does not match volume");

    const Volume guide = cfg.guide == GuideMode::median_prefilter ? median_filter(v, adj, bp) : v;
    const auto ball = ball_offsets(cfg.search_radius, v.naxes);
    const int np = cfg.num_patches;
    links.partners.assign(v.size() * static_cast<std::size_t>(np), 0);

    const int nx = v.dims[0], ny = v.dims[1], nz = v.dims[2];
    const long long n = static_cast<long long>(v.size());
    const bool par = v.size() >= (std::size_t{1} << 12);

#pragma omp parallel for schedule(static) if (par)
    for (long long si = 0; si < n; ++si) {
        const std::size_t s = static_cast<std::size_t>(si);
        int x = 0, y = 0, z = 0;
        v.coords(s, x, y, z);

        std::vector<Candidate> best;
        best.reserve(static_cast<std::size_t>(np) + 1);
        for (const auto& [o, dist] : ball) {
            const int qx = x + o[0], qy = y + o[1], qz = z + o[2];
            if (qx < 0 || qx >= nx || qy < 0 || qy >= ny || qz < 0 || qz >= nz) continue;
            Candidate c{ssd_at(guide, x, y, z, qx, qy, qz, cfg.patch_shape, bp), dist,
                        static_cast<std::uint32_t>(guide.index(qx, qy, qz))};
            if (static_cast<int>(best.size()) == np && !better(c, best.back())) continue;
            best.insert(std::upper_bound(best.begin(), best.end(), c, better), c);
            if (static_cast<int>(best.size()) > np) best.pop_back();
        }
        links.counts[s] = static_cast<std::int32_t>(best.size());
        for (std::size_t j = 0; j < best.size(); ++j)
            links.partners[s * static_cast<std::size_t>(np) + j] = best[j].index;
    }
    return links;
}

Volume nlwadf_step(const Volume& v, const NonLocalLinks& links, const FilterParams& p, double gamma_t) {
    if (p.adjacency.naxes != v.naxes)
        throw std::invalid_argument("nlwadf_step: adjacency dimensionality does not match volume");
    if (!(gamma_t > 0.0)) throw std::invalid_argument("nlwadf_step: gamma must be positive");

    Volume out = v;
    const double* in = v.data.data();
    double* res = out.data.data();
    detail::stencil_apply(v, p.adjacency, p.boundary,
                          [&](std::size_t s, const std::size_t* idx, const double* dist, int cnt) {
                              double flux = 0.0;
                              for (int k = 0; k < cnt; ++k) {
                                  const double grad = in[idx[k]] - in[s];
                                  flux += detail::tukey_unchecked(grad, gamma_t) / dist[k] * grad;
                              }
                              const auto ls = links.links_of(s);
                              for (const std::uint32_t q : ls) {
                                  const double grad = in[q] - in[s];
                                  flux += detail::tukey_unchecked(grad, gamma_t) / links.distance * grad;
                              }
                              const int n = cnt + static_cast<int>(ls.size());
                              if (n == 0) return;
                              res[s] = in[s] + flux / static_cast<double>(n);
                          });
    return out;
}

std::pair<Volume, FilterRunReport> run_nlwadf(const Volume& v, const FilterParams& p,
                                              const NonLocalConfig& cfg) {
    detail::validate_schedule(v, p);
    const NonLocalLinks links = build_links(v, cfg, p.adjacency, p.boundary);
    return detail::run_schedule(
        v, p, [&](const Volume& cur, double g) { return nlwadf_step(cur, links, p, g); });
}

}  // namespace adiff
