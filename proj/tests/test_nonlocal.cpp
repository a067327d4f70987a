#include "adiff/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "adiff/esf.hpp"
#include "adiff/metrics.hpp"
#include "adiff/noise.hpp"
#include "adiff/phantom.hpp"
#include "adiff/serial.hpp"
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include "support.hpp"

using namespace adiff;

namespace {

FilterParams nl_params(int axes, int size, BoundaryPolicy bp) {
    FilterParams p;
    p.variant = FilterVariant::wadf;
    p.adjacency = make_adjacency(axes, size);
    p.boundary = bp;
    return p;
}

NonLocalConfig config(double sr, double pr, double pd, int np, GuideMode guide, int axes = 2) {
    NonLocalConfig cfg;
    cfg.search_radius = sr;
    cfg.patch_shape = patch_offsets(pr, axes);
    cfg.patch_distance = pd;
    cfg.num_patches = np;
    cfg.guide = guide;
    return cfg;
}

bool same_links(const NonLocalLinks& a, const NonLocalLinks& b) {
    return a.stride == b.stride && a.counts == b.counts && a.partners == b.partners &&
           a.distance == b.distance;
}

}  // namespace

TEST_CASE("patch_offsets enumerates the discrete ball") {
    CHECK(patch_offsets(0.5, 2).offsets.size() == 1);   // just the center
    CHECK(patch_offsets(1.1, 2).offsets.size() == 5);   // + the 4 axis offsets
    CHECK(patch_offsets(1.5, 2).offsets.size() == 9);   // + the 4 diagonals
    CHECK(patch_offsets(1.9, 2).offsets.size() == 9);   // (±2,0) is still out
    CHECK(patch_offsets(2.0, 2).offsets.size() == 13);
    CHECK(patch_offsets(1.1, 3).offsets.size() == 7);
    CHECK(patch_offsets(1.5, 3).offsets.size() == 19);

    const PatchShape p = patch_offsets(1.5, 2);
    CHECK(p.radius == 1.5);
    CHECK(p.naxes == 2);
    bool has_zero = false;
    for (const auto& o : p.offsets) {
        if (o == std::array<int, 3>{0, 0, 0}) has_zero = true;
        // closed under negation
        const std::array<int, 3> neg{-o[0], -o[1], -o[2]};
        CHECK(std::find(p.offsets.begin(), p.offsets.end(), neg) != p.offsets.end());
        CHECK(o[2] == 0);  // 2D patches stay in-plane
        CHECK(std::sqrt(double(o[0]) * o[0] + double(o[1]) * o[1]) <= 1.5);
    }
    CHECK(has_zero);

    CHECK_THROWS_AS((void)patch_offsets(0.0, 2), std::invalid_argument);
    CHECK_THROWS_AS((void)patch_offsets(-1.0, 2), std::invalid_argument);
    CHECK_THROWS_AS((void)patch_offsets(1.1, 4), std::invalid_argument);
}

TEST_CASE("patch_ssd on small hand-checked cases") {
    const PatchShape patch = patch_offsets(1.1, 2);

    const Volume flat(5, 5, 3.0);
    CHECK(patch_ssd(flat, 0, 12, patch, BoundaryPolicy::count_in_bounds) == 0.0);
    CHECK(patch_ssd(flat, 0, 12, patch, BoundaryPolicy::periodic) == 0.0);

    // Single-pixel patch degenerates to the squared pixel difference.
    Volume v(4, 4, 0.0);
    v.data[5] = 3.0;
    v.data[10] = 7.0;
    CHECK(patch_ssd(v, 5, 10, patch_offsets(0.5, 2), BoundaryPolicy::count_in_bounds) == 16.0);

    // v[s] = s on a 4x4 grid: comparing the corner (0,0) with (1,1) keeps
    // only the jointly in-bounds offsets {0, +x, +y}, each differing by 5.
    Volume ramp(4, 4, 0.0);
    for (std::size_t s = 0; s < ramp.size(); ++s) ramp.data[s] = static_cast<double>(s);
    CHECK(patch_ssd(ramp, 0, 5, patch, BoundaryPolicy::count_in_bounds) == 25.0);

    // 2x1 periodic image [0, 10]: every one of the 5 offsets wraps onto the
    // opposite pixel (or back onto itself along y), so each contributes 100.
    Volume two(2, 1, 0.0);
    two.data[1] = 10.0;
    CHECK(patch_ssd(two, 0, 1, patch, BoundaryPolicy::periodic) == 100.0);

    // A patch that fits nowhere near the centers has no jointly valid
    // offset and reports +inf.
    PatchShape far;
    far.radius = 3.0;
    far.naxes = 2;
    far.offsets = {{3, 0, 0}};
    CHECK(std::isinf(patch_ssd(v, 1, 6, far, BoundaryPolicy::count_in_bounds)));
}

TEST_CASE("patch_ssd matches the serial reference") {
    std::mt19937_64 rng(601);
    for (int rep = 0; rep < 3; ++rep) {
        const Volume v2 = testutil::random_image(6, 6, rng);
        const Volume v3 = testutil::random_volume(4, 4, 3, rng);
        for (const auto bp : {BoundaryPolicy::count_in_bounds, BoundaryPolicy::periodic}) {
            for (const double r : {0.5, 1.1, 1.5, 2.0}) {
                const PatchShape p2 = patch_offsets(r, 2);
                const PatchShape p3 = patch_offsets(r, 3);
                for (std::size_t a = 0; a < v2.size(); a += 5)
                    for (std::size_t b = 0; b < v2.size(); b += 7) {
                        const double got = patch_ssd(v2, a, b, p2, bp);
                        const double want = serial::patch_ssd(v2, a, b, p2, bp);
                        CHECK(std::abs(got - want) <= 1e-12 * (1.0 + std::abs(want)));
                    }
                for (std::size_t a = 0; a < v3.size(); a += 7)
                    for (std::size_t b = 0; b < v3.size(); b += 11) {
                        const double got = patch_ssd(v3, a, b, p3, bp);
                        const double want = serial::patch_ssd(v3, a, b, p3, bp);
                        CHECK(std::abs(got - want) <= 1e-12 * (1.0 + std::abs(want)));
                    }
            }
        }
    }
}

TEST_CASE("build_links on a constant image falls back to nearest-by-index") {
    // Every SSD ties at zero, so ranking is purely (distance, index).
    const Volume v(6, 6, 4.0);
    const auto adj = make_adjacency(2, 8);
    const NonLocalConfig cfg = config(2.0, 1.1, 0.5, 2, GuideMode::median_prefilter);
    const NonLocalLinks links = build_links(v, cfg, adj, BoundaryPolicy::count_in_bounds);
    CHECK(links.distance == 0.5);

    // Interior pixel (3,3) = 21: distance-1 candidates are 15, 20, 22, 27;
    // the two lowest indices win.
    const auto mid = links.links_of(21);
    REQUIRE(mid.size() == 2);
    CHECK(mid[0] == 15);
    CHECK(mid[1] == 20);

    // Corner pixel 0: (1,0) and (0,1) are the nearest candidates.
    const auto corner = links.links_of(0);
    REQUIRE(corner.size() == 2);
    CHECK(corner[0] == 1);
    CHECK(corner[1] == 6);
}

TEST_CASE("build_links finds exact texture repeats") {
    // Two copies of a random 4-column block side by side: for pixels whose
    // patch sits inside one block, the shifted twin is a perfect (SSD = 0)
    // match and must win over every nearer candidate.
    std::mt19937_64 rng(602);
    Volume v(8, 8, 0.0);
    std::uniform_real_distribution<double> dist(0.0, 100.0);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 4; ++x) {
            const double val = dist(rng);
            v.at(x, y) = val;
            v.at(x + 4, y) = val;
        }
    const NonLocalConfig cfg = config(4.0, 1.1, 1.0, 1, GuideMode::raw);
    const NonLocalLinks links =
        build_links(v, cfg, make_adjacency(2, 8), BoundaryPolicy::count_in_bounds);
    for (int y = 0; y < 8; ++y)
        for (int x = 1; x <= 2; ++x) {
            const std::size_t s = v.index(x, y);
            const auto ls = links.links_of(s);
            REQUIRE(ls.size() == 1);
            CHECK(ls[0] == s + 4);
            const auto twin = links.links_of(s + 4);
            REQUIRE(twin.size() == 1);
            CHECK(twin[0] == s);
        }
}

TEST_CASE("build_links respects its structural guarantees") {
    std::mt19937_64 rng(603);
    const Volume v = testutil::random_image(9, 7, rng);
    const NonLocalConfig cfg = config(3.0, 1.5, 0.5, 3, GuideMode::median_prefilter);
    const NonLocalLinks links = build_links(v, cfg, make_adjacency(2, 4), BoundaryPolicy::periodic);
    for (std::size_t s = 0; s < v.size(); ++s) {
        const auto ls = links.links_of(s);
        CHECK(ls.size() <= 3);
        std::set<std::uint32_t> seen;
        int sx, sy, sz;
        v.coords(s, sx, sy, sz);
        for (const std::uint32_t q : ls) {
            CHECK(q != s);
            CHECK(q < v.size());
            CHECK(seen.insert(q).second);  // no duplicates
            int qx, qy, qz;
            v.coords(q, qx, qy, qz);
            const double dx = qx - sx, dy = qy - sy;
            // candidates are actual pixels inside the geometric ball, never
            // wrapped, even under the periodic policy
            CHECK(std::sqrt(dx * dx + dy * dy) <= 3.0 + 1e-12);
        }
    }
}

TEST_CASE("build_links matches the exhaustive serial reference") {
    std::mt19937_64 rng(604);
    for (int rep = 0; rep < 2; ++rep) {
        const Volume v2 = testutil::random_image(8, 8, rng);
        const Volume v3 = testutil::random_volume(4, 4, 3, rng);
        for (const auto bp : {BoundaryPolicy::count_in_bounds, BoundaryPolicy::periodic})
            for (const auto guide : {GuideMode::median_prefilter, GuideMode::raw})
                for (const double sr : {2.0, 3.0})
                    for (const int np : {1, 2}) {
                        const NonLocalConfig c2 = config(sr, 1.5, 0.5, np, guide, 2);
                        const auto adj2 = make_adjacency(2, 8);
                        CHECK(same_links(build_links(v2, c2, adj2, bp),
                                         serial::build_links(v2, c2, adj2, bp)));
                        const NonLocalConfig c3 = config(sr, 1.1, 0.5, np, guide, 3);
                        const auto adj3 = make_adjacency(3, 6);
                        CHECK(same_links(build_links(v3, c3, adj3, bp),
                                         serial::build_links(v3, c3, adj3, bp)));
                    }
    }
}

TEST_CASE("build_links is invariant to integer intensity shifts") {
    std::mt19937_64 rng(605);
    const Volume v = testutil::random_integer_image(7, 7, rng, 0, 50);
    Volume shifted = v;
    for (double& x : shifted.data) x += 100.0;  // exact in doubles
    const auto adj = make_adjacency(2, 8);
    for (const auto guide : {GuideMode::median_prefilter, GuideMode::raw}) {
        const NonLocalConfig cfg = config(3.0, 1.5, 0.5, 2, guide);
        CHECK(same_links(build_links(v, cfg, adj, BoundaryPolicy::count_in_bounds),
                         build_links(shifted, cfg, adj, BoundaryPolicy::count_in_bounds)));
    }
}

TEST_CASE("build_links validates its configuration") {
    const Volume v(5, 5, 1.0);
    const auto adj = make_adjacency(2, 4);
    const auto bp = BoundaryPolicy::count_in_bounds;
    CHECK_THROWS_AS((void)build_links(v, config(0.5, 1.1, 0.5, 2, GuideMode::raw), adj, bp),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)build_links(v, config(2.0, 1.1, 0.0, 2, GuideMode::raw), adj, bp),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)build_links(v, config(2.0, 1.1, -1.0, 2, GuideMode::raw), adj, bp),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)build_links(v, config(2.0, 1.1, 0.5, -1, GuideMode::raw), adj, bp),
                    std::invalid_argument);
    // 3D patch against a 2D image
    CHECK_THROWS_AS((void)build_links(v, config(2.0, 1.1, 0.5, 2, GuideMode::raw, 3), adj, bp),
                    std::invalid_argument);
    NonLocalConfig empty = config(2.0, 1.1, 0.5, 2, GuideMode::raw);
    empty.patch_shape.offsets.clear();
    CHECK_THROWS_AS((void)build_links(v, empty, adj, bp), std::invalid_argument);

    // num_patches = 0 is the documented degenerate case, not an error.
    const NonLocalLinks none = build_links(v, config(2.0, 1.1, 0.5, 0, GuideMode::raw), adj, bp);
    for (std::size_t s = 0; s < v.size(); ++s) CHECK(none.links_of(s).empty());
}

TEST_CASE("nlwadf_step with hand-built links matches explicit arithmetic") {
    // 5x5 plateau at 10 with a dark center pixel. The center gets two links
    // (weight 1/PD = 2 each) to clean pixels; all its gradients equal 10.
    Volume v(5, 5, 10.0);
    v.at(2, 2) = 0.0;
    const FilterParams p = nl_params(2, 8, BoundaryPolicy::count_in_bounds);

    NonLocalLinks links;
    links.distance = 0.5;
    links.stride = 2;
    links.partners.assign(v.size() * 2, 0);
    links.counts.assign(v.size(), 0);
    const std::size_t center = v.index(2, 2);
    links.partners[center * 2] = static_cast<std::uint32_t>(v.index(0, 0));
    links.partners[center * 2 + 1] = static_cast<std::uint32_t>(v.index(4, 0));
    links.counts[center] = 2;

    const double gamma = 8.0;
    const Volume out = nlwadf_step(v, links, p, gamma);

    // |H| = 8 local + 2 links = 10; local flux g*10*(4 + 4/sqrt(2)),
    // non-local flux g*(10/0.5)*2.
    const double g = tukey(10.0, gamma);
    const double want =
        (g * 10.0 * (4.0 + 4.0 / std::sqrt(2.0)) + g * (10.0 / 0.5) * 2.0) / 10.0;
    CHECK(out.at(2, 2) == doctest::Approx(want).epsilon(1e-12));

    // Pixels outside the dark pixel's neighborhood see zero gradients
    // everywhere and keep their value exactly.
    CHECK(out.at(0, 4) == 10.0);

    // A link-free neighbor of the center updates exactly like wadf: its
    // neighborhood count is unchanged and it has no non-local flux.
    const Volume wadf_out = wadf_step(v, p, gamma);
    CHECK(out.at(1, 2) == wadf_out.at(1, 2));
}

TEST_CASE("an empty link table reduces nlwadf_step to wadf_step") {
    std::mt19937_64 rng(606);
    for (const auto& [axes, size] : {std::pair{2, 8}, std::pair{3, 18}}) {
        const Volume v = axes == 2 ? testutil::random_image(7, 6, rng)
                                   : testutil::random_volume(5, 4, 4, rng);
        for (const auto bp : {BoundaryPolicy::count_in_bounds, BoundaryPolicy::periodic}) {
            const FilterParams p = nl_params(axes, size, bp);
            NonLocalConfig cfg = config(2.0, 1.1, 0.5, 0, GuideMode::raw, axes);
            const NonLocalLinks links = build_links(v, cfg, p.adjacency, bp);
            CHECK(testutil::max_abs_diff(nlwadf_step(v, links, p, 12.0), wadf_step(v, p, 12.0)) ==
                  0.0);
        }
    }
}

TEST_CASE("nlwadf_step matches the serial reference") {
    std::mt19937_64 rng(607);
    for (int rep = 0; rep < 3; ++rep) {
        const Volume v = testutil::random_image(8, 8, rng);
        for (const auto bp : {BoundaryPolicy::count_in_bounds, BoundaryPolicy::periodic}) {
            const FilterParams p = nl_params(2, 8, bp);
            const NonLocalConfig cfg = config(3.0, 1.5, 0.5, 2, GuideMode::median_prefilter);
            const NonLocalLinks links = build_links(v, cfg, p.adjacency, bp);
            for (const double gamma : {0.5, 8.0, 80.0})
                CHECK(testutil::max_rel_diff(nlwadf_step(v, links, p, gamma),
                                             serial::nlwadf_step(v, links, p, gamma)) <= 1e-12);
        }
    }
}

TEST_CASE("run_nlwadf stops immediately on a zero schedule") {
    std::mt19937_64 rng(608);
    const Volume v = testutil::random_image(6, 6, rng);
    FilterParams p = nl_params(2, 8, BoundaryPolicy::count_in_bounds);
    p.schedule.gamma0 = 0.0;
    const auto [out, report] = run_nlwadf(v, p, config(2.0, 1.1, 0.5, 2, GuideMode::raw));
    CHECK(report.iterations_run == 0);
    CHECK(report.stopped_by == StopReason::gamma_threshold);
    CHECK(testutil::max_abs_diff(out, v) == 0.0);
}

TEST_CASE("run_nlwadf is deterministic") {
    std::mt19937_64 rng(609);
    const Volume v = testutil::random_image(10, 10, rng);
    FilterParams p = nl_params(2, 8, BoundaryPolicy::count_in_bounds);
    p.schedule.gamma0 = 15.0;
    p.schedule.retention = 0.5;
    const NonLocalConfig cfg = config(3.0, 1.1, 0.5, 2, GuideMode::median_prefilter);
    const auto [a, ra] = run_nlwadf(v, p, cfg);
    const auto [b, rb] = run_nlwadf(v, p, cfg);
    CHECK(testutil::max_abs_diff(a, b) == 0.0);
    CHECK(ra.iterations_run == rb.iterations_run);
    CHECK(ra.gamma_trace == rb.gamma_trace);
}

TEST_CASE("run_nlwadf with num_patches = 0 is exactly the weighted filter") {
    std::mt19937_64 rng(610);
    const Volume v = testutil::random_image(9, 9, rng);
    FilterParams p = nl_params(2, 8, BoundaryPolicy::count_in_bounds);
    p.schedule.gamma0 = 20.0;
    p.schedule.retention = 0.6;
    const auto [nl, nl_report] = run_nlwadf(v, p, config(4.0, 1.1, 0.5, 0, GuideMode::raw));
    const auto [w, w_report] = run_filter(v, p);
    CHECK(testutil::max_abs_diff(nl, w) == 0.0);
    CHECK(nl_report.iterations_run == w_report.iterations_run);
}

TEST_CASE("extremum principle holds at the parameter grid corners") {
    // Schedule-driven gamma, exactly as the runner uses it.
    std::mt19937_64 rng(611);
    const auto adj = make_adjacency(2, 8);
    const auto bp = BoundaryPolicy::count_in_bounds;
    for (const double sr : {2.0, 4.0})
        for (const double pr : {1.1, 1.9})
            for (const double pd : {0.5, 2.0})
                for (const int np : {1, 2}) {
                    Volume v = testutil::random_image(10, 10, rng);
                    FilterParams p = nl_params(2, 8, bp);
                    const NonLocalConfig cfg = config(sr, pr, pd, np, GuideMode::median_prefilter);
                    const NonLocalLinks links = build_links(v, cfg, adj, bp);
                    double gamma = estimate_sigma_gs(v, adj, bp);
                    for (int it = 0; it < 15 && gamma > 0.0; ++it) {
                        const double old_max = max_intensity(v);
                        const double old_min = *std::min_element(v.data.begin(), v.data.end());
                        v = nlwadf_step(v, links, p, gamma);
                        CHECK(max_intensity(v) <= old_max + 1e-12);
                        CHECK(*std::min_element(v.data.begin(), v.data.end()) >= old_min - 1e-12);
                        gamma *= 0.8;
                    }
                }
}

TEST_CASE("non-local filtering improves a noisy phantom") {
    const Volume clean = make_phantom(48, 48);
    const Volume noisy = add_gaussian(clean, NoiseSpec{NoiseModel::gaussian, 0.05, 31});
    FilterParams p = nl_params(2, 8, BoundaryPolicy::count_in_bounds);
    p.schedule.gamma0 = 0.8 * estimate_sigma_gs(noisy, p.adjacency, p.boundary);
    p.schedule.retention = 0.32;
    const auto [out, report] = run_nlwadf(noisy, p, config(4.0, 1.1, 0.5, 2, GuideMode::median_prefilter));
    CHECK(report.iterations_run > 0);
    CHECK(psnr(out, clean) > psnr(noisy, clean));
}
