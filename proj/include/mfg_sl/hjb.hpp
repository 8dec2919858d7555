#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfg_sl/coupling.hpp"
#include "mfg_sl/grid.hpp"
#include "mfg_sl/parallel.hpp"
#include "mfg_sl/transport.hpp"

namespace mfg_sl {

/// Admissible controls |alpha| <= a_max for the per-node minimization.
struct ControlSearch {
    double a_max = 1.0;
};

struct SlStepResult {
    double value;
    double alpha;
};

/**
 * One semi-Lagrangian update at node i:
 *
 *   min_{|alpha| <= a_max} I[next](x_i - h alpha) + h alpha^2 / 2  + h running_cost.
 *
 * On each cell the interpolant is affine, so the objective is a parabola in
 * alpha whose vertex sits at the cell slope. The minimum is taken over the
 * clamped vertices and the cell end points of every reachable cell. Feet
 * beyond the hull see the constant boundary value and are dominated by the
 * boundary node, so the search is clipped to the hull.
 *
 * Ties go to the smallest |alpha|, then the smallest alpha.
 */
inline SlStepResult sl_step(const GridSpec& g, std::span<const double> next, std::size_t i, double running_cost,
                            const ControlSearch& search) {
    if (i >= g.n_nodes()) throw std::out_of_range("sl_step: node index out of range");
    if (!(search.a_max > 0.0)) throw std::invalid_argument("sl_step: a_max must be positive");
    const double h = g.h();
    const double rho = g.rho();
    const double xi = g.node(i);
    const double reach = h * search.a_max;
    const double y_lo = std::max(xi - reach, g.x_lo());
    const double y_hi = std::min(xi + reach, g.x_hi());

    const auto last_cell = g.n_nodes() - 2;
    const auto cell_lo = std::min(static_cast<std::size_t>(std::max(std::floor((y_lo - g.x_lo()) / rho), 0.0)), last_cell);
    const auto cell_hi = std::min(static_cast<std::size_t>(std::max(std::floor((y_hi - g.x_lo()) / rho), 0.0)), last_cell);

    double best_obj = std::numeric_limits<double>::infinity();
    double best_alpha = 0.0;
    auto consider = [&](double alpha, double interp) {
        const double obj = interp + 0.5 * h * alpha * alpha;
        if (obj < best_obj ||
            (obj == best_obj && (std::abs(alpha) < std::abs(best_alpha) ||
                                 (std::abs(alpha) == std::abs(best_alpha) && alpha < best_alpha)))) {
            best_obj = obj;
            best_alpha = alpha;
        }
    };

    for (std::size_t j = cell_lo; j <= cell_hi; ++j) {
        const double xl = g.node(j);
        const double xr = g.node(j + 1);
        const double a = std::max(xl, y_lo);
        const double b = std::min(xr, y_hi);
        if (a > b) continue;
        if (!std::isfinite(next[j]) || !std::isfinite(next[j + 1])) {
            throw std::invalid_argument("sl_step: non-finite values in next level");
        }
        const double slope = (next[j + 1] - next[j]) / rho;
        auto affine = [&](double y) {
            if (y == xl) return next[j];
            if (y == xr) return next[j + 1];
            return next[j] + slope * (y - xl);
        };
        // Control alpha moves the foot to y = x_i - h alpha.
        consider((xi - a) / h, affine(a));
        consider((xi - b) / h, affine(b));
        const double y_star = std::clamp(xi - h * slope, a, b);
        consider((xi - y_star) / h, affine(y_star));
    }
    if (!std::isfinite(best_obj)) throw std::invalid_argument("sl_step: non-finite values in next level");
    return {best_obj + h * running_cost, best_alpha};
}

/**
 * Control bound 2 c0 (1 + T), c0 the largest discrete slope of the terminal
 * and running costs. The discrete value slices are c0 (1 + T)-Lipschitz, so
 * no minimizer lies outside this bound.
 */
inline ControlSearch make_control_search(const GridSpec& g, std::span<const double> terminal,
                                         std::span<const NodeField> running) {
    double c0 = discrete_lipschitz(g, terminal);
    for (const auto& F : running) c0 = std::max(c0, discrete_lipschitz(g, F));
    const double bound = 2.0 * c0 * (1.0 + g.T());
    return {std::max(bound, g.rho() / g.h())};
}

/// Backward recursion v_N = terminal, v_k = S(v_{k+1}) with running[k] at level k.
inline SpaceTimeField solve_backward(const GridSpec& g, std::span<const double> terminal,
                                     std::span<const NodeField> running, const ControlSearch& search, int threads = 1) {
    check_field(g, terminal, "solve_backward");
    if (running.size() < g.n_steps()) throw std::invalid_argument("solve_backward: need running costs for levels 0..N-1");
    SpaceTimeField v = SpaceTimeField::zeros(g);
    v[g.n_steps()].assign(terminal.begin(), terminal.end());
    for (std::size_t k = g.n_steps(); k-- > 0;) {
        check_field(g, running[k], "solve_backward");
        const NodeField& next = v[k + 1];
        NodeField& cur = v[k];
        parallel_for(g.n_nodes(), threads, [&](std::size_t i) {
            cur[i] = sl_step(g, next, i, running[k][i], search).value;
        });
    }
    return v;
}

inline SpaceTimeField solve_backward(const GridSpec& g, std::span<const double> terminal,
                                     std::span<const NodeField> running, int threads = 1) {
    return solve_backward(g, terminal, running, make_control_search(g, terminal, running), threads);
}

/// Running costs F(x_i, m_k) for k = 0..N-1 under the problem's coupling.
inline std::vector<NodeField> running_costs(const GridSpec& g, const ProblemSpec& spec, const MassEvolution& mass,
                                            const InteractionKernel* kernel = nullptr, int threads = 1) {
    if (mass.size() != g.n_steps() + 1) throw std::invalid_argument("running_costs: mass needs N + 1 levels");
    std::vector<NodeField> F(g.n_steps());
    InteractionKernel local;
    if (spec.theta != 0.0 && kernel == nullptr) {
        local = build_interaction_kernel(spec.sigma, g.rho());
        kernel = &local;
    }
    for (std::size_t k = 0; k < g.n_steps(); ++k) F[k] = eval_F(g, spec, mass[k], kernel, threads);
    return F;
}

inline SpaceTimeField solve_backward(const GridSpec& g, const ProblemSpec& spec, const MassEvolution& mass,
                                     int threads = 1) {
    for (const auto& slice : mass.steps) check_simplex(slice, "solve_backward");
    const NodeField terminal = eval_G(g, spec);
    return solve_backward(g, terminal, running_costs(g, spec, mass, nullptr, threads), threads);
}

/// v(x, t) = I[v_{., [t/h]}](x): P1 in space, piecewise constant in time.
inline double extend_value(const GridSpec& g, const SpaceTimeField& v, double x, double t) {
    if (!(t >= 0.0 && t <= g.T() * (1.0 + 1e-12))) throw std::out_of_range("extend_value: time outside [0, T]");
    return interpolate(g, v[g.level_of(t)], x);
}

}  // namespace mfg_sl
