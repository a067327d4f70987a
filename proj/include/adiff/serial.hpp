#pragma once

#include "adiff/esf.hpp"
#include "adiff/filter.hpp"
#include "adiff/nonlocal.hpp"
#include "adiff/volume.hpp"

namespace adiff::serial {

/// Plain loop-based reference implementations of the hot kernels, written as
/// direct sums over the neighbors() lists with none of the stencil or OpenMP
/// machinery of the production code. They are the ground truth for the unit
/// and acceptance tests and the baseline for the benchmark tool.

Volume median_filter(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp);

Volume directional_gradient_sum(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp);

double estimate_sigma_gs(const Volume& v, const AdjacencyRelation& adj, BoundaryPolicy bp,
                         double top_fraction = 0.05);

Volume adf_step(const Volume& v, const FilterParams& p, double gamma_t);

Volume wadf_step(const Volume& v, const FilterParams& p, double gamma_t);

Volume nlwadf_step(const Volume& v, const NonLocalLinks& links, const FilterParams& p, double gamma_t);

double patch_ssd(const Volume& guide, std::size_t a, std::size_t b, const PatchShape& patch,
                 BoundaryPolicy bp);

NonLocalLinks build_links(const Volume& v, const NonLocalConfig& cfg, const AdjacencyRelation& adj,
                          BoundaryPolicy bp);

}  // namespace adiff::serial
