#include "adiff/volume.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stencil.hpp"

namespace adiff {

namespace {

void check_dims(int nx, int ny, int nz) {
    if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("volume dimensions must be positive");
}

}  // namespace

Volume::Volume(int nx, int ny, double fill) : dims{nx, ny, 1}, naxes(2) {
    check_dims(nx, ny, 1);
    data.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), fill);
}

Volume::Volume(int nx, int ny, int nz, double fill) : dims{nx, ny, nz}, naxes(3) {
    check_dims(nx, ny, nz);
    data.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz), fill);
}

AdjacencyRelation make_adjacency(int num_axes, int size) {
    const bool ok = (num_axes == 2 && (size == 4 || size == 8)) ||
                    (num_axes == 3 && (size == 6 || size == 18 || size == 26));
    if (!ok)
        throw std::invalid_argument("unsupported adjacency: " + std::to_string(num_axes) + " axes / " +
                                    std::to_string(size) + " neighbors");

    // Keep offsets with squared length <= cap: 1 for the face-connected
    // neighborhoods (4, 6), 2 for 18, and 3 for the full boxes (8, 26).
    int cap = 3;
    if (size == 4 || size == 6) cap = 1;
    if (size == 18) cap = 2;

    AdjacencyRelation adj;
    adj.naxes = num_axes;
    const int zr = num_axes == 3 ? 1 : 0;
    for (int dz = -zr; dz <= zr; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int d2 = dx * dx + dy * dy + dz * dz;
                if (d2 == 0 || d2 > cap) continue;
                adj.offsets.push_back({dx, dy, dz});
                adj.distances.push_back(std::sqrt(static_cast<double>(d2)));
            }
    return adj;
}

std::vector<std::pair<std::size_t, double>> neighbors(const Volume& v, std::size_t s,
                                                      const AdjacencyRelation& adj, BoundaryPolicy bp) {
    if (s >= v.size()) throw std::out_of_range("pixel index out of range");
    int x = 0, y = 0, z = 0;
    v.coords(s, x, y, z);

    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(adj.size());
    for (std::size_t k = 0; k < adj.size(); ++k) {
        const auto& o = adj.offsets[k];
        int xx = x + o[0], yy = y + o[1], zz = z + o[2];
        if (bp == BoundaryPolicy::periodic) {
            xx = detail::wrap_index(xx, v.dims[0]);
            yy = detail::wrap_index(yy, v.dims[1]);
            zz = detail::wrap_index(zz, v.dims[2]);
        } else if (xx < 0 || xx >= v.dims[0] || yy < 0 || yy >= v.dims[1] || zz < 0 || zz >= v.dims[2]) {
            continue;
        }
        out.emplace_back(v.index(xx, yy, zz), adj.distances[k]);
    }
    return out;
}

double max_intensity(const Volume& v) {
    if (v.empty()) throw std::invalid_argument("max_intensity of empty volume");
    return *std::max_element(v.data.begin(), v.data.end());
}

Volume median_filter(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp) {
    if (adj.naxes != v.naxes) throw std::invalid_argument("adjacency dimensionality does not match volume");
    Volume out = v;
    const double* in = v.data.data();
    double* res = out.data.data();
    detail::stencil_apply(v, adj, bp, [&](std::size_t s, const std::size_t* idx, const double*, int cnt) {
        double vals[27];
        vals[0] = in[s];
        for (int k = 0; k < cnt; ++k) vals[k + 1] = in[idx[k]];
        const int n = cnt + 1;
        std::sort(vals, vals + n);
        res[s] = (n % 2 == 1) ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    });
    return out;
}

}  // namespace adiff
