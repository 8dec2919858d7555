#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg_sl {

/// Values of a grid function at one time level, one entry per node.
using NodeField = std::vector<double>;

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> values) {
    CompensatedSum s;
    for (double v : values) s.add(v);
    return s.value();
}

/**
 * Uniform space lattice truncated to [x_lo, x_hi] together with the time
 * grid t_k = k h, k = 0..N, N h = T.
 *
 * Spacing and step are adjusted at construction so that both counts are
 * integral; the requested values are kept only for reporting.
 */
class GridSpec {
public:
    static GridSpec build(double x_lo, double x_hi, double rho, double h, double T) {
        if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("grid: spacing rho must be positive");
        if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("grid: time step h must be positive");
        if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("grid: horizon T must be positive");
        if (!std::isfinite(x_lo) || !std::isfinite(x_hi) || x_hi - x_lo < 2.0 * rho * (1.0 - 1e-12)) {
            throw std::invalid_argument("grid: domain must span at least two cells");
        }
        GridSpec g;
        g.x_lo_ = x_lo;
        g.x_hi_ = x_hi;
        const auto cells = static_cast<std::size_t>(std::llround((x_hi - x_lo) / rho));
        g.n_nodes_ = std::max<std::size_t>(cells, 2) + 1;
        g.rho_ = (x_hi - x_lo) / static_cast<double>(g.n_nodes_ - 1);
        g.n_steps_ = std::max<std::size_t>(static_cast<std::size_t>(std::llround(T / h)), 1);
        g.h_ = T / static_cast<double>(g.n_steps_);
        g.T_ = T;
        return g;
    }

    double x_lo() const { return x_lo_; }
    double x_hi() const { return x_hi_; }
    double rho() const { return rho_; }
    double h() const { return h_; }
    double T() const { return T_; }
    std::size_t n_nodes() const { return n_nodes_; }
    /// Number of time steps N; there are N + 1 time levels.
    std::size_t n_steps() const { return n_steps_; }

    double node(std::size_t i) const {
        return i + 1 == n_nodes_ ? x_hi_ : x_lo_ + static_cast<double>(i) * rho_;
    }
    double time(std::size_t k) const {
        return k == n_steps_ ? T_ : static_cast<double>(k) * h_;
    }
    bool in_hull(double x) const { return x >= x_lo_ && x <= x_hi_; }

    /// Time level holding t under the floor rule [t/h]; t_k itself maps to k.
    std::size_t level_of(double t) const {
        if (!(t >= -1e-12 * T_ && t <= T_ * (1.0 + 1e-12))) {
            throw std::out_of_range("grid: time outside [0, T]");
        }
        const double s = t / h_;
        const double r = std::round(s);
        double k = std::abs(s - r) < 1e-9 ? r : std::floor(s);
        k = std::clamp(k, 0.0, static_cast<double>(n_steps_));
        return static_cast<std::size_t>(k);
    }

private:
    GridSpec() = default;
    double x_lo_ = 0.0, x_hi_ = 0.0, rho_ = 0.0, h_ = 0.0, T_ = 0.0;
    std::size_t n_nodes_ = 0, n_steps_ = 0;
};

inline GridSpec build_grid(double x_lo, double x_hi, double rho, double h, double T) {
    return GridSpec::build(x_lo, x_hi, rho, h, T);
}

/// Grid function over all time levels k = 0..N.
struct SpaceTimeField {
    std::vector<NodeField> levels;

    static SpaceTimeField zeros(const GridSpec& g) {
        return {std::vector<NodeField>(g.n_steps() + 1, NodeField(g.n_nodes(), 0.0))};
    }
    NodeField& operator[](std::size_t k) { return levels[k]; }
    const NodeField& operator[](std::size_t k) const { return levels[k]; }
    std::size_t size() const { return levels.size(); }
};

inline void check_field(const GridSpec& g, std::span<const double> f, const char* what) {
    if (f.size() != g.n_nodes()) {
        throw std::invalid_argument(std::string(what) + ": field length does not match grid");
    }
}

/// (x - x_lo) / rho, snapped to the nearest integer when within round-off of a node.
inline double lattice_coordinate(const GridSpec& g, double x) {
    const double s = (x - g.x_lo()) / g.rho();
    const double r = std::round(s);
    return std::abs(s - r) <= 1e-11 ? r : s;
}

/// Hat function of node i: max(1 - |x - x_i| / rho, 0).
inline double basis_eval(const GridSpec& g, std::size_t i, double x) {
    if (i >= g.n_nodes()) throw std::out_of_range("basis_eval: node index out of range");
    return std::max(1.0 - std::abs(lattice_coordinate(g, x) - static_cast<double>(i)), 0.0);
}

/// Cell [x_j, x_j+1] containing x (clamped to the hull) and local coordinate in [0, 1].
struct CellPosition {
    std::size_t cell;
    double lambda;
};

inline CellPosition locate(const GridSpec& g, double x) {
    const double s = lattice_coordinate(g, x);
    const auto last = static_cast<double>(g.n_nodes() - 2);
    const double c = std::clamp(std::floor(s), 0.0, last);
    return {static_cast<std::size_t>(c), std::clamp(s - c, 0.0, 1.0)};
}

/**
 * P1 interpolant sum_i f_i beta_i(x). Outside the hull the boundary value is
 * extended as a constant.
 */
inline double interpolate(const GridSpec& g, std::span<const double> f, double x) {
    if (x <= g.x_lo()) return f.front();
    if (x >= g.x_hi()) return f.back();
    const auto [j, lambda] = locate(g, x);
    return (1.0 - lambda) * f[j] + lambda * f[j + 1];
}

inline NodeField sample(const GridSpec& g, const std::function<double(double)>& fn) {
    NodeField out(g.n_nodes());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(g.node(i));
    return out;
}

/// Largest discrete slope max_i |f_{i+1} - f_i| / rho.
inline double discrete_lipschitz(const GridSpec& g, std::span<const double> f) {
    double lip = 0.0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) lip = std::max(lip, std::abs(f[i + 1] - f[i]));
    return lip / g.rho();
}

namespace detail {

inline constexpr int kSimpsonIntervals = 16;

inline double simpson(const std::function<double(double)>& density, double a, double b) {
    if (!(b > a)) return 0.0;
    const int n = kSimpsonIntervals;
    const double step = (b - a) / n;
    double acc = 0.0;
    for (int s = 0; s <= n; ++s) {
        const double y = density(s == n ? b : a + s * step);
        if (!std::isfinite(y)) throw std::domain_error("cell_integral: non-finite density sample");
        const double w = (s == 0 || s == n) ? 1.0 : (s % 2 == 1 ? 4.0 : 2.0);
        acc += w * y;
    }
    return acc * step / 3.0;
}

}  // namespace detail

/**
 * Integral of a density over E_i = [x_i - rho/2, x_i + rho/2] by composite
 * Simpson (17 samples per piece). Known discontinuities of the density can be
 * passed as breakpoints; the cell is split there so each piece is smooth.
 */
inline double cell_integral(const GridSpec& g, const std::function<double(double)>& density, std::size_t i,
                            std::span<const double> breakpoints = {}) {
    if (i >= g.n_nodes()) throw std::out_of_range("cell_integral: node index out of range");
    const double a = g.node(i) - 0.5 * g.rho();
    const double b = g.node(i) + 0.5 * g.rho();
    std::vector<double> cuts{a};
    for (double p : breakpoints) {
        if (p > a && p < b) cuts.push_back(p);
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double lo = cuts[s], hi = cuts[s + 1];
        // Evaluate strictly inside each piece so one-sided limits are used at jumps.
        const double pad = 1e-12 * (hi - lo) + 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi));
        total += (hi - lo) / (hi - lo - 2 * pad) * detail::simpson(density, lo + pad, hi - pad);
    }
    return total;
}

}  // namespace mfg_sl
