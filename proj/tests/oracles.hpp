#pragma once

#include <cmath>
#include <random>
#include <numbers>
#include <vector>

#include "mfg_sl/grid.hpp"
#include "mfg_sl/hjb.hpp"

namespace mfg_sl::oracle {

/// Random field with |f_{i+1} - f_i| <= lip * rho.
inline NodeField random_lipschitz_field(const GridSpec& g, double lip, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> step(-1.0, 1.0);
    NodeField f(g.n_nodes());
    f[0] = step(rng);
    for (std::size_t i = 1; i < f.size(); ++i) f[i] = f[i - 1] + lip * g.rho() * step(rng);
    return f;
}

/// Random point of the probability simplex with `n` entries.
inline NodeField random_simplex(std::size_t n, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    NodeField m(n);
    double total = 0.0;
    for (double& x : m) total += (x = e(rng));
    for (double& x : m) x /= total;
    return m;
}

inline double gaussian_density(double x, double s) {
    return std::exp(-0.5 * x * x / (s * s)) / (std::sqrt(2 * std::numbers::pi) * s);
}

/// W1 by the north-west-corner rule: the monotone coupling of two discrete
/// measures on sorted atoms is optimal in 1D.
inline double w1_monotone_coupling(const GridSpec& g, NodeField a, NodeField b) {
    std::size_t i = 0, j = 0;
    double cost = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= 0.0) { ++i; continue; }
        if (b[j] <= 0.0) { ++j; continue; }
        const double q = std::min(a[i], b[j]);
        cost += q * std::abs(g.node(i) - g.node(j));
        a[i] -= q;
        b[j] -= q;
        if (a[i] <= 1e-18) ++i;
        if (b[j] <= 1e-18) ++j;
    }
    return cost;
}

/// min over alpha = m * step, |alpha| <= a_max, of I[next](x_i - h alpha) + h alpha^2 / 2,
/// plus h * running_cost, together with the two ends of the admissible range.
/// Feet are kept inside the hull.
inline double brute_force_sl_value(const GridSpec& g, const NodeField& next, std::size_t i, double running_cost,
                                   double a_max, double step = 1e-6) {
    const double xi = g.node(i), h = g.h();
    const double lo = std::max(-a_max, (xi - g.x_hi()) / h);
    const double hi = std::min(a_max, (xi - g.x_lo()) / h);
    const auto m_lo = static_cast<long long>(std::ceil(lo / step - 1e-9));
    const auto m_hi = static_cast<long long>(std::floor(hi / step + 1e-9));
    auto objective = [&](double alpha) { return interpolate(g, next, xi - h * alpha) + 0.5 * h * alpha * alpha; };
    double best = std::min(objective(lo), objective(hi));
    for (long long m = m_lo; m <= m_hi; ++m) best = std::min(best, objective(static_cast<double>(m) * step));
    return best + h * running_cost;
}

/**
 * Sup over nodes in [0.2, 0.8] at t = 0.5 of |(phi_k - S[phi_{k+1}]) / h - (-phi_t + |phi_x|^2 / 2 - F)|
 * for phi = sin(x)(1 + t), F = cos(2x) / 2, rho = h^2 on [-1, 2].
 */
inline double consistency_residual(double h) {
    const auto g = build_grid(-1, 2, h * h, h, 1.0);
    auto phi = [](double x, double t) { return std::sin(x) * (1 + t); };
    auto F = [](double x) { return 0.5 * std::cos(2 * x); };
    const std::size_t k = g.level_of(0.5);
    const double tk = g.time(k), tk1 = g.time(k + 1);
    NodeField next(g.n_nodes());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = phi(g.node(i), tk1);
    const ControlSearch search{4.0};
    double err = 0.0;
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        const double x = g.node(i);
        if (x < 0.2 - 1e-12 || x > 0.8 + 1e-12) continue;
        const double r = (phi(x, tk) - sl_step(g, next, i, F(x), search).value) / g.h();
        const double dphi = std::cos(x) * (1 + tk);
        err = std::max(err, std::abs(r - (-std::sin(x) + 0.5 * dphi * dphi - F(x))));
    }
    return err;
}

}  // namespace mfg_sl::oracle
