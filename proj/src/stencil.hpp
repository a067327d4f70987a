#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <vector>

#include "adiff/volume.hpp"

namespace adiff::detail {

inline int wrap_index(int c, int n) {
    const int m = c % n;
    return m < 0 ? m + n : m;
}

/// Driver for pixel-local neighborhood kernels.
///
/// For every pixel s it gathers the neighbor indices (bounds-filtered or
/// wrapped per policy) and calls
///     fn(s, nbr_idx, nbr_dist, count)
/// exactly once. Rows whose every neighbor stays in bounds take a fast path
/// with precomputed linear deltas. The row loop is OpenMP-parallel for large
/// volumes, so fn must only write to state owned by pixel s.
template <class Fn>
void stencil_apply(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp, Fn&& fn) {
    const int nx = v.dims[0], ny = v.dims[1], nz = v.dims[2];
    const int m = static_cast<int>(adj.size());

    int rx = 0, ry = 0, rz = 0;
    std::vector<std::ptrdiff_t> lin(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        const auto& o = adj.offsets[static_cast<std::size_t>(k)];
        rx = std::max(rx, std::abs(o[0]));
        ry = std::max(ry, std::abs(o[1]));
        rz = std::max(rz, std::abs(o[2]));
        lin[static_cast<std::size_t>(k)] =
            o[0] + static_cast<std::ptrdiff_t>(nx) * (o[1] + static_cast<std::ptrdiff_t>(ny) * o[2]);
    }

    const long long nrows = static_cast<long long>(ny) * nz;
    const bool par = v.size() >= (std::size_t{1} << 14);

#pragma omp parallel for schedule(static) if (par)
    for (long long row = 0; row < nrows; ++row) {
        const int z = static_cast<int>(row / ny);
        const int y = static_cast<int>(row % ny);
        const std::size_t base =
            static_cast<std::size_t>(nx) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(ny) * z);

        std::size_t idx[27];
        double dist[27];
        auto border = [&](int x) {
            int cnt = 0;
            for (int k = 0; k < m; ++k) {
                const auto& o = adj.offsets[static_cast<std::size_t>(k)];
                int xx = x + o[0], yy = y + o[1], zz = z + o[2];
                if (bp == BoundaryPolicy::periodic) {
                    xx = wrap_index(xx, nx);
                    yy = wrap_index(yy, ny);
                    zz = wrap_index(zz, nz);
                } else if (xx < 0 || xx >= nx || yy < 0 || yy >= ny || zz < 0 || zz >= nz) {
                    continue;
                }
                idx[cnt] = v.index(xx, yy, zz);
                dist[cnt] = adj.distances[static_cast<std::size_t>(k)];
                ++cnt;
            }
            fn(base + static_cast<std::size_t>(x), idx, dist, cnt);
        };

        const bool inner_row = y >= ry && y <= ny - 1 - ry && z >= rz && z <= nz - 1 - rz;
        if (inner_row && nx > 2 * rx) {
            for (int x = 0; x < rx; ++x) border(x);
            for (int x = rx; x <= nx - 1 - rx; ++x) {
                const std::size_t s = base + static_cast<std::size_t>(x);
                for (int k = 0; k < m; ++k) idx[k] = s + static_cast<std::size_t>(lin[static_cast<std::size_t>(k)]);
                fn(s, idx, adj.distances.data(), m);
            }
            for (int x = nx - rx; x < nx; ++x) border(x);
        } else {
            for (int x = 0; x < nx; ++x) border(x);
        }
    }
}

}  // namespace adiff::detail
