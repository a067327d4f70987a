#pragma once

#include <utility>
#include <vector>

#include "adiff/esf.hpp"
#include "adiff/volume.hpp"

namespace adiff {

enum class FilterVariant {
    adf,   ///< classic scheme: uniform step lambda, unweighted fluxes
    wadf,  ///< distance-weighted fluxes, step size fixed at 1
};

struct FilterParams {
    FilterVariant variant = FilterVariant::wadf;
    double lambda = 1.0;  ///< adf only; ignored by wadf, which always uses 1
    AdjacencyRelation adjacency;
    BoundaryPolicy boundary = BoundaryPolicy::count_in_bounds;
    GammaSchedule schedule;
    int max_iterations = 1000;
};

enum class StopReason { gamma_threshold, max_iterations };

struct FilterRunReport {
    int iterations_run = 0;
    std::vector<double> gamma_trace;  ///< gamma used at each executed step
    StopReason stopped_by = StopReason::gamma_threshold;
};

/// One synchronous diffusion step of the classic scheme:
///   I_s' = I_s + (lambda / n_s) * sum_p g(I_p - I_s, gamma) * (I_p - I_s)
/// where n_s is the neighbor count actually seen under the boundary policy.
/// All updates read the input volume, so the result is order-independent.
Volume adf_step(const Volume& v, const FilterParams& p, double gamma_t);

/// One step of the distance-weighted scheme: each flux is divided by the
/// Euclidean neighbor distance and the step size is fixed at 1:
///   I_s' = I_s + (1 / n_s) * sum_p g(I_p - I_s, gamma) / d_sp * (I_p - I_s)
Volume wadf_step(const Volume& v, const FilterParams& p, double gamma_t);

/// Runs the selected variant under the gamma schedule. Before every step the
/// stop rule is checked against max_intensity of the *original* input, so a
/// gamma0 already below threshold yields zero iterations. Throws
/// std::invalid_argument on bad parameters (retention or stop_fraction out
/// of (0,1), negative gamma0, adf lambda outside (0, lambda_max], adjacency
/// dimensionality mismatch).
std::pair<Volume, FilterRunReport> run_filter(const Volume& v, const FilterParams& p);

}  // namespace adiff
