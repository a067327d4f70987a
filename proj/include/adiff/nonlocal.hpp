#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "adiff/filter.hpp"
#include "adiff/volume.hpp"

namespace adiff {

/// Ball-shaped patch: all integer offsets (including the zero offset) whose
/// Euclidean length is <= radius.
struct PatchShape {
    double radius = 1.0;
    int naxes = 2;
    std::vector<std::array<int, 3>> offsets;
};

/// Enumerates the patch offsets in (z, y, x)-lexicographic order. radius must
/// be positive; radius < 1 yields the single-pixel patch.
PatchShape patch_offsets(double radius, int num_axes);

enum class GuideMode {
    median_prefilter,  ///< match patches on a median-smoothed copy
    raw,               ///< match patches on the image itself
};

struct NonLocalConfig {
    double search_radius = 4.0;   ///< candidates lie within this Euclidean distance, >= 1
    PatchShape patch_shape;
    double patch_distance = 0.5;  ///< synthetic distance assigned to every non-local flux, > 0
    int num_patches = 2;          ///< partners kept per pixel; 0 disables the non-local part
    GuideMode guide = GuideMode::median_prefilter;
};

/// Per-pixel non-local partner table, built once per run on the guide image.
/// Pixel s owns the slice partners[s*stride .. s*stride + counts[s]).
struct NonLocalLinks {
    double distance = 1.0;  ///< the synthetic distance (PD) shared by all links
    int stride = 0;
    std::vector<std::uint32_t> partners;
    std::vector<std::int32_t> counts;

    std::span<const std::uint32_t> links_of(std::size_t s) const {
        if (stride == 0) return {};
        return {partners.data() + s * static_cast<std::size_t>(stride),
                static_cast<std::size_t>(counts[s])};
    }
};

/// Mean squared difference between the patches centered at pixels a and b,
/// averaged over the offsets where both samples are available. Under
/// count_in_bounds an offset contributes only if it stays in bounds at both
/// centers; under periodic every offset contributes (wrapped). Returns +inf
/// if no offset is jointly valid.
double patch_ssd(const Volume& guide, std::size_t a, std::size_t b, const PatchShape& patch,
                 BoundaryPolicy bp);

/// Selects, for every pixel s, the num_patches in-bounds candidates q with
/// 0 < |q - s| <= search_radius whose guide patches are most similar.
/// Ranking is by (patch_ssd, geometric distance, linear index), so the table
/// is fully deterministic; ties on a constant image resolve to the nearest
/// candidates. The guide is median_filter(v, adj, bp) unless cfg.guide is
/// raw. The search ball is never wrapped — candidates are actual pixels —
/// regardless of the boundary policy, which only affects patch comparison
/// and the median guide. Border pixels with fewer candidates than
/// num_patches get truncated lists.
NonLocalLinks build_links(const Volume& v, const NonLocalConfig& cfg, const AdjacencyRelation& adj,
                          BoundaryPolicy bp);

/// Distance-weighted step over the extended neighborhood H_s = local
/// neighbors + links: local fluxes are weighted by 1/d_sp as in wadf_step,
/// every non-local flux by 1/links.distance, and the sum is normalized by
/// |H_s|. Gradients are taken on the current iterate, not the guide. An
/// empty link table makes this identical to wadf_step.
Volume nlwadf_step(const Volume& v, const NonLocalLinks& links, const FilterParams& p, double gamma_t);

/// Builds the link table once on the input, then iterates nlwadf_step under
/// the same gamma schedule and stopping rule as run_filter. Links are not
/// recomputed between iterations.
std::pair<Volume, FilterRunReport> run_nlwadf(const Volume& v, const FilterParams& p,
                                              const NonLocalConfig& cfg);

}  // namespace adiff
