#include "adiff/phantom.hpp"

#include <algorithm>

namespace adiff {

Volume make_phantom(int nx, int ny, double peak) {
    Volume v(nx, ny, 0.25 * peak);
    const double cx = (nx - 1) / 2.0;
    const double cy = (ny - 1) / 2.0;
    const double side = static_cast<double>(std::min(nx, ny));
    const double r_outer = side * 5.0 / 16.0;
    const double r_inner = side * 5.0 / 32.0;
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            if (d2 <= r_inner * r_inner)
                v.at(x, y) = 0.85 * peak;
            else if (d2 <= r_outer * r_outer)
                v.at(x, y) = 0.50 * peak;
        }
    return v;
}

}  // namespace adiff
