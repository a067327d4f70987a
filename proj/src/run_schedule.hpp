#pragma once

#include <functional>
#include <stdexcept>
#include <utility>

#include "adiff/filter.hpp"

namespace adiff::detail {

inline void validate_schedule(const Volume& v, const FilterParams& p) {
    if (p.adjacency.naxes != v.naxes)
        throw std::invalid_argument("run_filter: adjacency dimensionality does not match volume");
    const auto& s = p.schedule;
    if (!(s.retention > 0.0 && s.retention < 1.0))
        throw std::invalid_argument("run_filter: retention must lie in (0, 1)");
    if (!(s.stop_fraction > 0.0 && s.stop_fraction < 1.0))
        throw std::invalid_argument("run_filter: stop_fraction must lie in (0, 1)");
    if (!(s.gamma0 >= 0.0)) throw std::invalid_argument("run_filter: gamma0 must be non-negative");
    if (p.max_iterations < 0) throw std::invalid_argument("run_filter: max_iterations must be non-negative");
}

/// Shared schedule loop: checks the stop rule before each step (against the
/// original input's max intensity), applies `step`, then decays gamma.
inline std::pair<Volume, FilterRunReport> run_schedule(
    const Volume& v, const FilterParams& p, const std::function<Volume(const Volume&, double)>& step) {
    const double imax = max_intensity(v);
    FilterRunReport report;
    Volume cur = v;
    double gamma = p.schedule.gamma0;
    for (int t = 0; t < p.max_iterations; ++t) {
        if (should_stop(gamma, imax, p.schedule.stop_fraction)) {
            report.stopped_by = StopReason::gamma_threshold;
            report.iterations_run = static_cast<int>(report.gamma_trace.size());
            return {std::move(cur), std::move(report)};
        }
        cur = step(cur, gamma);
        report.gamma_trace.push_back(gamma);
        gamma *= p.schedule.retention;
    }
    report.stopped_by = should_stop(gamma, imax, p.schedule.stop_fraction) ? StopReason::gamma_threshold
                                                                           : StopReason::max_iterations;
    report.iterations_run = static_cast<int>(report.gamma_trace.size());
    return {std::move(cur), std::move(report)};
}

}  // namespace adiff::detail
