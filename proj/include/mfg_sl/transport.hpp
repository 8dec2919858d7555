#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfg_sl/grid.hpp"

namespace mfg_sl {

/// Thrown when mass-carrying characteristics leave the truncated lattice.
class MarginViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Discrete probability measures m_{., k} on the nodes, one per time level.
struct MassEvolution {
    std::vector<NodeField> steps;
    /// Total weight whose flow target left the hull but was below the
    /// negligible-weight threshold, and was therefore kept on the boundary node.
    double boundary_clamped = 0.0;

    NodeField& operator[](std::size_t k) { return steps[k]; }
    const NodeField& operator[](std::size_t k) const { return steps[k]; }
    std::size_t size() const { return steps.size(); }
};

struct TransportOptions {
    /// Source weights at or below this value may leave the hull; they are
    /// deposited on the nearest boundary node and tallied. Heavier sources abort.
    double negligible_weight = 1e-6;
};

inline void check_simplex(std::span<const double> m, const char* what, double tol = 1e-10) {
    for (double w : m) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument(std::string(what) + ": negative or non-finite weight");
    }
    if (std::abs(compensated_sum(m) - 1.0) > tol) throw std::invalid_argument(std::string(what) + ": weights do not sum to 1");
}

/// Cell-integrated initial weights m_{i,0}, renormalized to unit total mass.
inline NodeField initial_mass(const GridSpec& g, const std::function<double(double)>& m0,
                              std::span<const double> breakpoints = {}) {
    NodeField w(g.n_nodes());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = cell_integral(g, m0, i, breakpoints);
        if (w[i] < 0.0) throw std::invalid_argument("initial_mass: density takes negative values");
    }
    const double total = compensated_sum(w);
    if (!(total >= 1e-6)) throw std::invalid_argument("initial_mass: total mass on the grid below 1e-6");
    for (double& x : w) x /= total;
    return w;
}

/// One step of the discrete characteristic: x_i - h alpha_i.
inline double flow_step(const GridSpec& g, std::span<const double> alpha, std::size_t i) {
    return g.node(i) - g.h() * alpha[i];
}

inline std::string format_weight(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", w);
    return buf;
}

struct PushResult {
    NodeField weights;
    double boundary_clamped = 0.0;
};

/**
 * m_{i,k+1} = sum_j beta_i(x_j - h alpha_j) m_{j,k}. Each source weight is
 * split between the two nodes of the cell containing its target, so the
 * total is conserved up to rounding.
 */
inline PushResult push_forward(const GridSpec& g, std::span<const double> m, std::span<const double> alpha,
                               const TransportOptions& opts = {}) {
    check_field(g, m, "push_forward");
    check_field(g, alpha, "push_forward");
    const double slack = 1e-12 * g.rho();
    PushResult out{NodeField(m.size(), 0.0), 0.0};
    for (std::size_t j = 0; j < m.size(); ++j) {
        const double w = m[j];
        if (w == 0.0) continue;
        double y = flow_step(g, alpha, j);
        if (!std::isfinite(y)) throw std::invalid_argument("push_forward: non-finite control");
        if (y < g.x_lo() - slack || y > g.x_hi() + slack) {
            if (w > opts.negligible_weight) {
                throw MarginViolation("push_forward: flow target " + std::to_string(y) + " from node " +
                                      std::to_string(j) + " carrying weight " + format_weight(w) +
                                      " leaves the grid hull; enlarge the domain");
            }
            out.boundary_clamped += w;
            y = std::clamp(y, g.x_lo(), g.x_hi());
        }
        const auto [c, lambda] = locate(g, y);
        const double right = lambda * w;
        out.weights[c] += w - right;
        out.weights[c + 1] += right;
    }
    return out;
}

/// Runs the push-forward recursion from m0_weights over the controls of levels 0..N-1.
inline MassEvolution evolve_mass(const GridSpec& g, std::span<const double> m0_weights, const SpaceTimeField& alphas,
                                 const TransportOptions& opts = {}) {
    if (alphas.size() < g.n_steps()) throw std::invalid_argument("evolve_mass: need a control for every step");
    MassEvolution ev;
    ev.steps.reserve(g.n_steps() + 1);
    ev.steps.emplace_back(m0_weights.begin(), m0_weights.end());
    for (std::size_t k = 0; k < g.n_steps(); ++k) {
        auto next = push_forward(g, ev.steps[k], alphas[k], opts);
        ev.boundary_clamped += next.boundary_clamped;
        ev.steps.push_back(std::move(next.weights));
    }
    return ev;
}

/**
 * Density of the space-time extension: piecewise constant on the cells
 * E_i (scaled by 1/rho), linear in time between levels. Points outside the
 * union of cells get 0.
 */
inline double density_at(const GridSpec& g, const MassEvolution& ev, double x, double t) {
    if (!(t >= 0.0 && t <= g.T() * (1.0 + 1e-12))) throw std::out_of_range("density_at: time outside [0, T]");
    const double s = (x - g.x_lo()) / g.rho() + 0.5;
    if (s < 0.0 || s >= static_cast<double>(g.n_nodes())) return 0.0;
    const auto i = static_cast<std::size_t>(std::floor(s));
    const std::size_t k = std::min(static_cast<std::size_t>(std::floor(t / g.h())), g.n_steps());
    if (k == g.n_steps()) return ev[k][i] / g.rho();
    const double theta = std::clamp((t - g.time(k)) / g.h(), 0.0, 1.0);
    return ((1.0 - theta) * ev[k][i] + theta * ev[k + 1][i]) / g.rho();
}

/// Wasserstein-1 distance of two node-supported measures on the same grid:
/// rho * sum_i |A_i - B_i| with A, B the cumulative weights.
inline double wasserstein1(const GridSpec& g, std::span<const double> a, std::span<const double> b) {
    check_field(g, a, "wasserstein1");
    check_field(g, b, "wasserstein1");
    check_simplex(a, "wasserstein1");
    check_simplex(b, "wasserstein1");
    CompensatedSum ca, cb, total;
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        ca.add(a[i]);
        cb.add(b[i]);
        total.add(std::abs(ca.value() - cb.value()));
    }
    return g.rho() * total.value();
}

/// Wasserstein-1 distance between measures on arbitrary (sorted) atom positions,
/// e.g. final masses computed on two different grids.
inline double wasserstein1_atoms(std::span<const double> xa, std::span<const double> wa, std::span<const double> xb,
                                 std::span<const double> wb) {
    if (xa.size() != wa.size() || xb.size() != wb.size() || xa.empty() || xb.empty()) {
        throw std::invalid_argument("wasserstein1_atoms: mismatched inputs");
    }
    std::size_t ia = 0, ib = 0;
    CompensatedSum ca, cb, total;
    double x = std::min(xa[0], xb[0]);
    while (ia < xa.size() || ib < xb.size()) {
        const double next_a = ia < xa.size() ? xa[ia] : INFINITY;
        const double next_b = ib < xb.size() ? xb[ib] : INFINITY;
        const double next = std::min(next_a, next_b);
        total.add(std::abs(ca.value() - cb.value()) * (next - x));
        x = next;
        while (ia < xa.size() && xa[ia] == x) ca.add(wa[ia++]);
        while (ib < xb.size() && xb[ib] == x) cb.add(wb[ib++]);
    }
    return total.value();
}

}  // namespace mfg_sl
