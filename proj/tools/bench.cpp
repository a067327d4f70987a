#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>

#include <fmt/format.h>

#include "adiff/esf.hpp"
#include "adiff/filter.hpp"
#include "adiff/nonlocal.hpp"
#include "adiff/serial.hpp"
#include "adiff/volume.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace adiff;
using clock_type = std::chrono::steady_clock;

/// Best-of-reps wall time in milliseconds (one untimed warm-up call).
double time_ms(const std::function<void()>& fn, int reps = 5) {
    fn();
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = clock_type::now();
        fn();
        const auto t1 = clock_type::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

double max_abs_diff(const Volume& a, const Volume& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

Volume random_image(int nx, int ny, int nz, std::uint64_t seed) {
    Volume v = nz > 1 ? Volume(nx, ny, nz) : Volume(nx, ny);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 100.0);
    for (double& x : v.data) x = dist(rng);
    return v;
}

void report(const std::string& name, double serial_ms, double parallel_ms, double diff) {
    fmt::print("{:<34} {:>9.2f} {:>9.2f} {:>7.2f}x {:>10.3g}\n", name, serial_ms, parallel_ms,
               serial_ms / parallel_ms, diff);
}

}  // namespace

int main() {
#ifdef _OPENMP
    fmt::print("OpenMP threads: {}\n", omp_get_max_threads());
#else
    fmt::print("built without OpenMP; both columns run serially\n");
#endif
    fmt::print("{:<34} {:>9} {:>9} {:>8} {:>10}\n", "kernel", "serial/ms", "openmp/ms", "speedup",
               "max|diff|");

    // Local kernels on a 3D volume with the widest stencil.
    {
        const Volume v = random_image(96, 96, 96, 11);
        const AdjacencyRelation adj = make_adjacency(3, 26);
        const BoundaryPolicy bp = BoundaryPolicy::count_in_bounds;
        Volume a, b;
        report("median_filter 96^3 adj26",
               time_ms([&] { a = serial::median_filter(v, adj, bp); }),
               time_ms([&] { b = median_filter(v, adj, bp); }), max_abs_diff(a, b));
        report("directional_gradient_sum 96^3",
               time_ms([&] { a = serial::directional_gradient_sum(v, adj, bp); }),
               time_ms([&] { b = directional_gradient_sum(v, adj, bp); }), max_abs_diff(a, b));
        FilterParams p;
        p.adjacency = adj;
        p.boundary = bp;
        const double gamma = estimate_sigma_gs(v, adj, bp);
        report("wadf_step 96^3 adj26",
               time_ms([&] { a = serial::wadf_step(v, p, gamma); }),
               time_ms([&] { b = wadf_step(v, p, gamma); }), max_abs_diff(a, b));
    }

    // Non-local pipeline on a 2D image at the table-best settings.
    {
        const Volume v = random_image(256, 256, 1, 12);
        const AdjacencyRelation adj = make_adjacency(2, 8);
        const BoundaryPolicy bp = BoundaryPolicy::count_in_bounds;
        NonLocalConfig cfg;
        cfg.search_radius = 4.0;
        cfg.patch_shape = patch_offsets(1.1, 2);
        cfg.patch_distance = 0.5;
        cfg.num_patches = 2;
        NonLocalLinks la, lb;
        const double t_ser = time_ms([&] { la = serial::build_links(v, cfg, adj, bp); }, 3);
        const double t_par = time_ms([&] { lb = build_links(v, cfg, adj, bp); }, 3);
        const bool same = la.partners == lb.partners && la.counts == lb.counts;
        report("build_links 256^2 sr4 pr1.1", t_ser, t_par, same ? 0.0 : 1.0);

        FilterParams p;
        p.adjacency = adj;
        p.boundary = bp;
        const double gamma = estimate_sigma_gs(v, adj, bp);
        Volume a, b;
        report("nlwadf_step 256^2 #P2",
               time_ms([&] { a = serial::nlwadf_step(v, lb, p, gamma); }),
               time_ms([&] { b = nlwadf_step(v, lb, p, gamma); }), max_abs_diff(a, b));
    }
    return 0;
}
