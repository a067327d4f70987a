#include "adiff/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace adiff {

namespace {

void check_shapes(const Volume& i, const Volume& j) {
    if (!i.same_shape(j)) throw std::invalid_argument("metrics: volume shapes differ");
    if (i.empty()) throw std::invalid_argument("metrics: empty volumes");
}

// Population means, variances and covariance, two-pass for accuracy.
struct Moments {
    double mean_i, mean_j, var_i, var_j, cov;
};

Moments moments(const Volume& i, const Volume& j) {
    const std::size_t n = i.size();
    double si = 0.0, sj = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        si += i.data[k];
        sj += j.data[k];
    }
    Moments m{si / static_cast<double>(n), sj / static_cast<double>(n), 0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
        const double di = i.data[k] - m.mean_i;
        const double dj = j.data[k] - m.mean_j;
        m.var_i += di * di;
        m.var_j += dj * dj;
        m.cov += di * dj;
    }
    m.var_i /= static_cast<double>(n);
    m.var_j /= static_cast<double>(n);
    m.cov /= static_cast<double>(n);
    return m;
}

}  // namespace

double mse(const Volume& i, const Volume& j) {
    check_shapes(i, j);
    double sum = 0.0;
    for (std::size_t k = 0; k < i.size(); ++k) {
        const double d = i.data[k] - j.data[k];
        sum += d * d;
    }
    return sum / static_cast<double>(i.size());
}

double psnr(const Volume& i, const Volume& j) {
    const double m = mse(i, j);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    const double peak = std::max(max_intensity(i), max_intensity(j));
    return 20.0 * std::log10(peak) - 10.0 * std::log10(m);
}

double ssim(const Volume& i, const Volume& j) {
    check_shapes(i, j);
    const Moments m = moments(i, j);
    const double n = static_cast<double>(i.size());
    const double c1 = 0.0001 * n * n;
    const double c2 = 0.0009 * n * n;
    return (2.0 * m.mean_i * m.mean_j + c1) * (2.0 * m.cov + c2) /
           ((m.mean_i * m.mean_i + m.mean_j * m.mean_j + c1) * (m.var_i + m.var_j + c2));
}

double iqi(const Volume& i, const Volume& j) {
    check_shapes(i, j);
    const Moments m = moments(i, j);
    const double den = (m.mean_i * m.mean_i + m.mean_j * m.mean_j) * (m.var_i + m.var_j);
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 4.0 * m.mean_i * m.mean_j * m.cov / den;
}

MetricsReport compute_metrics(const Volume& i, const Volume& j) {
    return {mse(i, j), psnr(i, j), ssim(i, j), iqi(i, j)};
}

}  // namespace adiff
