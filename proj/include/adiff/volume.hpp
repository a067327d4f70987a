#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

namespace adiff {

/// Dense scalar image (2D) or volume (3D).
///
/// Intensities are always stored as doubles in x-fastest linear order; a 2D
/// image is a volume with nz == 1 and naxes == 2, so one code path serves
/// both dimensionalities. Physical spacing is carried for I/O round trips
/// but all neighborhood distances below are in pixel units.
struct Volume {
    std::array<int, 3> dims{0, 0, 1};
    int naxes = 2;
    std::vector<double> data;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};

    Volume() = default;
    Volume(int nx, int ny, double fill = 0.0);
    Volume(int nx, int ny, int nz, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    std::size_t index(int x, int y, int z = 0) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
    }
    void coords(std::size_t s, int& x, int& y, int& z) const {
        x = static_cast<int>(s % static_cast<std::size_t>(dims[0]));
        const std::size_t rest = s / static_cast<std::size_t>(dims[0]);
        y = static_cast<int>(rest % static_cast<std::size_t>(dims[1]));
        z = static_cast<int>(rest / static_cast<std::size_t>(dims[1]));
    }

    double& at(int x, int y, int z = 0) { return data[index(x, y, z)]; }
    double at(int x, int y, int z = 0) const { return data[index(x, y, z)]; }

    bool same_shape(const Volume& o) const { return naxes == o.naxes && dims == o.dims; }
};

/// How pixel neighborhoods behave at the image border.
enum class BoundaryPolicy {
    count_in_bounds,  ///< border pixels see only their in-bounds neighbors
    periodic,         ///< indices wrap around on every axis
};

/// Local neighborhood: integer displacement vectors plus their Euclidean
/// lengths in pixels. Offsets never include the zero vector and are closed
/// under negation.
struct AdjacencyRelation {
    int naxes = 2;
    std::vector<std::array<int, 3>> offsets;  // z component is 0 in 2D
    std::vector<double> distances;
    std::size_t size() const { return offsets.size(); }
};

/// Builds the standard neighborhood for the given dimensionality.
/// Valid sizes are 4 and 8 in 2D, and 6, 18 and 26 in 3D; anything else
/// throws std::invalid_argument.
AdjacencyRelation make_adjacency(int num_axes, int size);

/// In-bounds (or wrapped) neighbors of pixel s as (linear index, distance)
/// pairs. Under count_in_bounds the list shrinks at borders; under periodic
/// it always has adj.size() entries.
std::vector<std::pair<std::size_t, double>> neighbors(const Volume& v, std::size_t s,
                                                      const AdjacencyRelation& adj, BoundaryPolicy bp);

/// Maximum intensity over the volume. Throws std::invalid_argument if empty.
double max_intensity(const Volume& v);

/// Neighborhood median of {pixel} ∪ neighbors; even-sized sets use the mean
/// of the two middle values.
Volume median_filter(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp);

}  // namespace adiff
