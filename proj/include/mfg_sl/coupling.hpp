#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfg_sl/grid.hpp"
#include "mfg_sl/mollify.hpp"
#include "mfg_sl/parallel.hpp"
#include "mfg_sl/transport.hpp"

namespace mfg_sl {

/**
 * Problem data: running cost F(x, m) = f(x) + theta V(x, m), terminal cost
 * G(x), initial density m0 on [x_lo, x_hi] x [0, T], plus the discretization
 * and stopping parameters.
 */
struct ProblemSpec {
    std::string name;
    double x_lo = 0.0;
    double x_hi = 1.0;
    double T = 1.0;
    std::function<double(double)> f = [](double) { return 0.0; };
    double theta = 0.0;
    double sigma = 0.0;
    std::function<double(double)> G = [](double) { return 0.0; };
    std::function<double(double)> m0;
    /// Jump locations of m0, used to split cell quadrature.
    std::vector<double> m0_breakpoints;
    double eps = 0.0;
    double rho = 0.0;
    double h = 0.0;
    double tau = 1e-3;
    int p_max = 20;

    void validate() const {
        if (!(theta >= 0.0)) throw std::invalid_argument("problem: theta must be nonnegative");
        if (theta > 0.0 && !(sigma > 0.0)) throw std::invalid_argument("problem: sigma must be positive when theta > 0");
        if (!(eps > 0.0) || !(rho > 0.0) || !(h > 0.0) || !(T > 0.0)) {
            throw std::invalid_argument("problem: eps, rho, h and T must be positive");
        }
        if (!(tau >= 0.0)) throw std::invalid_argument("problem: tau must be nonnegative");
        if (p_max < 1) throw std::invalid_argument("problem: p_max must be at least 1");
        if (!(x_hi > x_lo)) throw std::invalid_argument("problem: empty domain");
        if (!m0) throw std::invalid_argument("problem: missing initial density");
    }

    GridSpec grid() const { return build_grid(x_lo, x_hi, rho, h, T); }
};

/**
 * Lattice kernel of V = rho_sigma * (rho_sigma * m): the self-convolution of
 * the discrete Gaussian taps, stored with half-width 2 * radius.
 */
struct InteractionKernel {
    double sigma = 0.0;
    double rho = 0.0;
    std::size_t radius = 0;
    std::vector<double> taps;  // taps[d + radius], d = i - j

    double at(std::ptrdiff_t d) const {
        const auto r = static_cast<std::ptrdiff_t>(radius);
        return (d < -r || d > r) ? 0.0 : taps[static_cast<std::size_t>(d + r)];
    }
    /// Largest value V can take at a node, attained for a point mass.
    double peak() const { return taps[radius] / rho; }
};

/// Truncation (in units of sigma) of the Gaussian taps entering V.
inline constexpr double kInteractionTruncation = 5.0;

inline InteractionKernel build_interaction_kernel(double sigma, double rho) {
    const MollifierKernel w = build_kernel(sigma, rho, kInteractionTruncation);
    InteractionKernel k;
    k.sigma = sigma;
    k.rho = rho;
    k.radius = 2 * w.radius;
    k.taps.assign(2 * k.radius + 1, 0.0);
    const auto r = static_cast<std::ptrdiff_t>(w.radius);
    for (std::ptrdiff_t a = -r; a <= r; ++a) {
        for (std::ptrdiff_t b = -r; b <= r; ++b) {
            k.taps[static_cast<std::size_t>(a + b + 2 * r)] += w.tap(a) * w.tap(b);
        }
    }
    return k;
}

/// V_i = (1/rho) sum_j K_{i-j} m_j, the double Gaussian convolution of the
/// node-supported measure, read as a density at the nodes.
inline NodeField eval_V(const GridSpec& g, std::span<const double> m, const InteractionKernel& kernel, int threads = 1) {
    check_field(g, m, "eval_V");
    std::vector<std::size_t> support;
    for (std::size_t j = 0; j < m.size(); ++j) {
        if (m[j] != 0.0) support.push_back(j);
    }
    NodeField V(m.size(), 0.0);
    const double inv_rho = 1.0 / g.rho();
    parallel_for(m.size(), threads, [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t j : support) {
            acc += kernel.at(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(j)) * m[j];
        }
        V[i] = acc * inv_rho;
    });
    return V;
}

inline NodeField eval_V(const GridSpec& g, std::span<const double> m, double sigma) {
    if (sigma < g.rho()) throw std::invalid_argument("eval_V: sigma < rho, kernel under-resolved");
    return eval_V(g, m, build_interaction_kernel(sigma, g.rho()));
}

/// F_i = f(x_i) + theta V_i. The convolution is skipped when theta = 0.
inline NodeField eval_F(const GridSpec& g, const ProblemSpec& spec, std::span<const double> m,
                        const InteractionKernel* kernel = nullptr, int threads = 1) {
    check_field(g, m, "eval_F");
    NodeField F = sample(g, spec.f);
    if (spec.theta == 0.0) return F;
    NodeField V = kernel ? eval_V(g, m, *kernel, threads) : eval_V(g, m, spec.sigma);
    for (std::size_t i = 0; i < F.size(); ++i) F[i] += spec.theta * V[i];
    return F;
}

inline NodeField eval_G(const GridSpec& g, const ProblemSpec& spec) { return sample(g, spec.G); }

/// One row of the parameter study on the first test problem, with the
/// published fixed-point errors after 20 iterations.
struct Table1Row {
    double rho;
    double h;
    double eps;
    double paper_E_v;
    double paper_E_m;
};

inline constexpr std::array<Table1Row, 4> kTable1Rows{{
    {1.50e-2, 3.00e-2, 6.00e-2, 4.57e-6, 2.08e-4},
    {7.50e-3, 1.50e-2, 4.00e-2, 1.05e-5, 7.20e-4},
    {3.75e-3, 7.50e-3, 2.50e-2, 1.04e-5, 9.96e-4},
    {1.87e-3, 3.75e-3, 1.60e-2, 9.74e-4, 3.56e-3},
}};

/// Preset used for test1 when no row is requested (the row shown in the mass plots).
inline constexpr int kTest1DefaultRow = 3;

/**
 * Built-in problems:
 *  - test1: crowd-averse agents on [-0.1, 1.1] avoiding the boundary at T.
 *  - test2: crowd-averse agents on [0, 1] attracted to x = 0.2.
 *  - nogame: test2 without the interaction term (uncoupled).
 * `preset` selects a row of kTable1Rows (1-based) for test1; 0 means default.
 */
inline ProblemSpec builtin_problem(const std::string& name, int preset = 0) {
    ProblemSpec p;
    p.name = name;
    if (name == "test1") {
        if (preset < 0 || preset > static_cast<int>(kTable1Rows.size())) {
            throw std::invalid_argument("builtin_problem: test1 preset must be in 1..4");
        }
        const Table1Row& row = kTable1Rows[static_cast<std::size_t>((preset == 0 ? kTest1DefaultRow : preset) - 1)];
        p.x_lo = -0.1;
        p.x_hi = 1.1;
        p.T = 1.0;
        p.f = [](double) { return 0.0; };
        p.theta = 0.3;
        p.sigma = 0.2;
        p.G = [](double x) {
            const double a = x + 0.5, b = 1.5 - x;
            return -0.5 * a * a * b * b;
        };
        // nu(x) = 1_[0,1](x) (1 - 0.2 cos(pi x)) integrates to exactly 1.
        p.m0 = [](double x) { return (x >= 0.0 && x <= 1.0) ? 1.0 - 0.2 * std::cos(std::numbers::pi * x) : 0.0; };
        p.m0_breakpoints = {0.0, 1.0};
        p.rho = row.rho;
        p.h = row.h;
        p.eps = row.eps;
        p.tau = 1e-3;
        p.p_max = 20;
        return p;
    }
    if (name == "test2" || name == "nogame") {
        if (preset != 0) throw std::invalid_argument("builtin_problem: presets exist only for test1");
        p.x_lo = 0.0;
        p.x_hi = 1.0;
        p.T = 1.0;
        p.f = [](double x) { return (x - 0.2) * (x - 0.2); };
        p.theta = name == "test2" ? 1.0 : 0.0;
        p.sigma = 0.25;
        p.G = [](double) { return 0.0; };
        // Normalizer of exp(-(x - 0.75)^2 / 0.1^2) over [0, 1].
        const double z = 0.05 * std::sqrt(std::numbers::pi) * (std::erf(2.5) + std::erf(7.5));
        p.m0 = [z](double x) {
            if (x < 0.0 || x > 1.0) return 0.0;
            const double s = (x - 0.75) / 0.1;
            return std::exp(-s * s) / z;
        };
        p.m0_breakpoints = {0.0, 1.0};
        p.rho = 3.3e-3;
        p.h = 5e-3;
        p.eps = 0.025;
        p.tau = 1e-3;
        p.p_max = 50;
        return p;
    }
    throw std::invalid_argument("builtin_problem: unknown problem '" + name + "'");
}

}  // namespace mfg_sl
