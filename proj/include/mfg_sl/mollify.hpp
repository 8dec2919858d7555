#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfg_sl/grid.hpp"
#include "mfg_sl/parallel.hpp"

namespace mfg_sl {

/**
 * Discrete Gaussian taps w_j, |j| <= radius, sampled on the rho-lattice with
 * standard deviation eps and renormalized to unit sum.
 */
struct MollifierKernel {
    double eps = 0.0;
    double rho = 0.0;
    std::size_t radius = 0;
    std::vector<double> weights;  // weights[j + radius] = w_j

    double tap(std::ptrdiff_t j) const { return weights[static_cast<std::size_t>(j + static_cast<std::ptrdiff_t>(radius))]; }
};

/// `truncation` is the half-width in units of eps (4 by default).
inline MollifierKernel build_kernel(double eps, double rho, double truncation = 4.0) {
    if (!(rho > 0.0) || !(eps > 0.0)) throw std::invalid_argument("build_kernel: eps and rho must be positive");
    if (eps < rho) throw std::invalid_argument("build_kernel: eps < rho, kernel under-resolved");
    MollifierKernel k;
    k.eps = eps;
    k.rho = rho;
    k.radius = static_cast<std::size_t>(std::ceil(truncation * eps / rho - 1e-9));
    const auto r = static_cast<std::ptrdiff_t>(k.radius);
    k.weights.resize(2 * k.radius + 1);
    for (std::ptrdiff_t j = -r; j <= r; ++j) {
        const double x = static_cast<double>(j) * rho / eps;
        k.weights[static_cast<std::size_t>(j + r)] = std::exp(-0.5 * x * x);
    }
    // Sum outward from the tails so that w_j and w_-j accumulate identically.
    double total = k.weights[k.radius];
    for (std::ptrdiff_t j = r; j >= 1; --j) total += 2.0 * k.weights[static_cast<std::size_t>(r + j)];
    for (double& w : k.weights) w /= total;
    return k;
}

/// (f * w)_i = sum_j w_j f_{i-j}, constant extension of f beyond the hull.
inline NodeField smooth(const GridSpec& g, std::span<const double> f, const MollifierKernel& k, int threads = 1) {
    check_field(g, f, "smooth");
    const auto n = static_cast<std::ptrdiff_t>(f.size());
    const auto r = static_cast<std::ptrdiff_t>(k.radius);
    NodeField out(f.size());
    parallel_for(f.size(), threads, [&](std::size_t idx) {
        const auto i = static_cast<std::ptrdiff_t>(idx);
        double acc = k.tap(0) * f[idx];
        for (std::ptrdiff_t j = 1; j <= r; ++j) {
            const double left = f[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i - j, 0, n - 1))];
            const double right = f[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i + j, 0, n - 1))];
            acc += k.tap(j) * (left + right);
        }
        out[idx] = acc;
    });
    return out;
}

/// Central differences inside, one-sided differences at the two end nodes.
inline NodeField gradient_central(const GridSpec& g, std::span<const double> f) {
    check_field(g, f, "gradient_central");
    const std::size_t n = f.size();
    const double rho = g.rho();
    NodeField d(n);
    d[0] = (f[1] - f[0]) / rho;
    d[n - 1] = (f[n - 1] - f[n - 2]) / rho;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * rho);
    return d;
}

}  // namespace mfg_sl
