#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mfg_sl/grid.hpp"
#include "mfg_sl/transport.hpp"

// Refinement-stability statistics of a computed solution.

namespace mfg_sl {

/// max_{i,k} m_{i,k} / rho.
inline double max_density(const GridSpec& g, const MassEvolution& ev) {
    double m = 0.0;
    for (const auto& step : ev.steps) m = std::max(m, *std::max_element(step.begin(), step.end()));
    return m / g.rho();
}

/// Radius of the smallest ball around 0 holding every node whose weight
/// exceeds `threshold`, over all time levels.
inline double support_radius(const GridSpec& g, const MassEvolution& ev, double threshold = 1e-10) {
    double r = 0.0;
    for (const auto& step : ev.steps) {
        for (std::size_t i = 0; i < step.size(); ++i) {
            if (step[i] > threshold) r = std::max(r, std::abs(g.node(i)));
        }
    }
    return r;
}

/// max_k W1(m_k, m_{k+1}) / h.
inline double time_lipschitz(const GridSpec& g, const MassEvolution& ev) {
    double c = 0.0;
    for (std::size_t k = 0; k + 1 < ev.size(); ++k) c = std::max(c, wasserstein1(g, ev[k], ev[k + 1]));
    return c / g.h();
}

/// One-sided curvature bound max_{i,k} (v_{i+1,k} - 2 v_{i,k} + v_{i-1,k}) / rho^2.
inline double semiconcavity_constant(const GridSpec& g, const SpaceTimeField& v) {
    double c = -INFINITY;
    for (const auto& level : v.levels) {
        for (std::size_t i = 1; i + 1 < level.size(); ++i) {
            c = std::max(c, level[i + 1] - 2.0 * level[i] + level[i - 1]);
        }
    }
    return c / (g.rho() * g.rho());
}

/// Node positions of a grid, for cross-grid comparisons.
inline std::vector<double> node_positions(const GridSpec& g) {
    std::vector<double> x(g.n_nodes());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = g.node(i);
    return x;
}

/// Width of the interval between the 25% and 75% quantiles of node weights.
inline double interquartile_width(const GridSpec& g, std::span<const double> m) {
    auto quantile = [&](double q) {
        CompensatedSum acc;
        for (std::size_t i = 0; i < m.size(); ++i) {
            acc.add(m[i]);
            if (acc.value() >= q) return g.node(i);
        }
        return g.x_hi();
    };
    return quantile(0.75) - quantile(0.25);
}

}  // namespace mfg_sl
