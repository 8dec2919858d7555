#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "mfg_sl/coupling.hpp"
#include "mfg_sl/grid.hpp"
#include "mfg_sl/hjb.hpp"
#include "mfg_sl/mollify.hpp"
#include "mfg_sl/transport.hpp"

namespace mfg_sl {

enum class SolveStatus { converged, cap_reached };

inline const char* to_string(SolveStatus s) { return s == SolveStatus::converged ? "converged" : "cap_reached"; }

/// Errors of iteration p (1-based): E_v = |v^p - v^{p-1}|_inf, E_m = |m^p - m^{p-1}|_inf
/// on node weights; E_m_density is the same change measured on densities m / rho.
struct IterationRecord {
    int p = 0;
    double E_v = 0.0;
    double E_m = 0.0;
    double E_m_density = 0.0;
    double wall_seconds = 0.0;
};

struct IterationReport {
    std::vector<IterationRecord> records;
    SolveStatus status = SolveStatus::cap_reached;
    std::vector<std::string> diagnostics;

    int iterations() const { return static_cast<int>(records.size()); }
    double total_seconds() const {
        double s = 0.0;
        for (const auto& r : records) s += r.wall_seconds;
        return s;
    }
};

struct IterateResult {
    SpaceTimeField v;
    SpaceTimeField alpha;
    MassEvolution m;
};

struct MfgSolution {
    SpaceTimeField v;
    SpaceTimeField alpha;
    MassEvolution m;
    IterationReport report;
};

struct SolverOptions {
    int threads = 1;
    TransportOptions transport{};
};

inline double sup_distance(const std::vector<NodeField>& a, const std::vector<NodeField>& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        for (std::size_t i = 0; i < a[k].size(); ++i) d = std::max(d, std::abs(a[k][i] - b[k][i]));
    }
    return d;
}

/**
 * Fixed-point iteration for the discrete MFG system on one grid: backward
 * value recursion against a frozen mass evolution, mollified central
 * gradients as controls, forward push-forward of the initial weights.
 */
class MfgSolver {
public:
    MfgSolver(ProblemSpec spec, SolverOptions opts = {})
        : spec_(std::move(spec)), opts_(opts), grid_(make_grid(spec_)),
          mollifier_(build_kernel(spec_.eps, grid_.rho())) {
        if (spec_.theta > 0.0) {
            if (spec_.sigma < grid_.rho()) throw std::invalid_argument("solver: sigma < rho, kernel under-resolved");
            interaction_ = build_interaction_kernel(spec_.sigma, grid_.rho());
        }
        m0_ = initial_mass(grid_, spec_.m0, spec_.m0_breakpoints);
        check_parameters();
    }

    const GridSpec& grid() const { return grid_; }
    const ProblemSpec& spec() const { return spec_; }
    const MollifierKernel& mollifier() const { return mollifier_; }
    const NodeField& initial_weights() const { return m0_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Every level equals the cell-integrated initial weights.
    MassEvolution initial_guess() const {
        MassEvolution ev;
        ev.steps.assign(grid_.n_steps() + 1, m0_);
        return ev;
    }

    SpaceTimeField solve_value(const MassEvolution& m_prev) const {
        const NodeField terminal = eval_G(grid_, spec_);
        const auto running =
            running_costs(grid_, spec_, m_prev, spec_.theta > 0.0 ? &interaction_ : nullptr, opts_.threads);
        return solve_backward(grid_, terminal, running, opts_.threads);
    }

    SpaceTimeField controls(const SpaceTimeField& v) const {
        SpaceTimeField alpha;
        alpha.levels.reserve(v.size());
        for (const auto& level : v.levels) {
            alpha.levels.push_back(gradient_central(grid_, smooth(grid_, level, mollifier_, opts_.threads)));
        }
        return alpha;
    }

    IterateResult iterate_once(const MassEvolution& m_prev) const {
        if (m_prev.size() != grid_.n_steps() + 1) throw std::invalid_argument("iterate_once: mass needs N + 1 levels");
        IterateResult r;
        r.v = solve_value(m_prev);
        r.alpha = controls(r.v);
        r.m = evolve_mass(grid_, m0_, r.alpha, opts_.transport);
        return r;
    }

    MfgSolution solve() const {
        MfgSolution sol;
        sol.report.diagnostics = warnings_;
        MassEvolution m = initial_guess();
        SpaceTimeField v_prev = SpaceTimeField::zeros(grid_);
        for (int p = 1; p <= spec_.p_max; ++p) {
            const auto t0 = std::chrono::steady_clock::now();
            IterateResult it = iterate_once(m);
            IterationRecord rec;
            rec.p = p;
            rec.E_v = sup_distance(it.v.levels, v_prev.levels);
            rec.E_m = sup_distance(it.m.steps, m.steps);
            rec.E_m_density = rec.E_m / grid_.rho();
            rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            sol.report.records.push_back(rec);
            m = std::move(it.m);
            v_prev = it.v;
            sol.v = std::move(it.v);
            sol.alpha = std::move(it.alpha);
            if (std::max(rec.E_v, rec.E_m) < spec_.tau) {
                sol.report.status = SolveStatus::converged;
                break;
            }
        }
        sol.m = std::move(m);
        append_margin_diagnostics(sol);
        return sol;
    }

private:
    static GridSpec make_grid(const ProblemSpec& spec) {
        spec.validate();
        return spec.grid();
    }

    void check_parameters() {
        const double rho = grid_.rho(), h = grid_.h(), eps = spec_.eps;
        if (!(rho < h)) {
            throw std::invalid_argument("solver: the scheme needs rho < h (inverse CFL); got rho = " +
                                        std::to_string(rho) + ", h = " + std::to_string(h));
        }
        if (rho * rho / (eps * eps * eps) > 1.0) {
            warnings_.push_back("rho^2 / eps^3 = " + std::to_string(rho * rho / (eps * eps * eps)) + " exceeds 1");
        }
        if (h / eps > 1.0) warnings_.push_back("h / eps = " + std::to_string(h / eps) + " exceeds 1");
    }

    void append_margin_diagnostics(MfgSolution& sol) const {
        double a_max = 0.0;
        for (const auto& level : sol.alpha.levels) {
            for (double a : level) a_max = std::max(a_max, std::abs(a));
        }
        const double margin = grid_.h() * a_max + 4.0 * spec_.eps;
        double lo = grid_.x_hi(), hi = grid_.x_lo();
        for (const auto& step : sol.m.steps) {
            for (std::size_t i = 0; i < step.size(); ++i) {
                if (step[i] > 1e-12) {
                    lo = std::min(lo, grid_.node(i));
                    hi = std::max(hi, grid_.node(i));
                }
            }
        }
        if (lo - grid_.x_lo() < margin || grid_.x_hi() - hi < margin) {
            std::ostringstream os;
            os << "mass support [" << lo << ", " << hi << "] is closer than h*A_max + 4*eps = " << margin
               << " to the grid boundary; boundary extension may affect nodes carrying mass";
            sol.report.diagnostics.push_back(os.str());
        }
        if (sol.m.boundary_clamped > 0.0) {
            std::ostringstream os;
            os << "negligible weight " << sol.m.boundary_clamped << " flowed past the hull and was kept on boundary nodes";
            sol.report.diagnostics.push_back(os.str());
        }
    }

    ProblemSpec spec_;
    SolverOptions opts_;
    GridSpec grid_;
    MollifierKernel mollifier_;
    InteractionKernel interaction_;
    NodeField m0_;
    std::vector<std::string> warnings_;
};

inline MassEvolution initial_guess(const ProblemSpec& spec) { return MfgSolver(spec).initial_guess(); }

inline IterateResult iterate_once(const ProblemSpec& spec, const MassEvolution& m_prev, SolverOptions opts = {}) {
    return MfgSolver(spec, opts).iterate_once(m_prev);
}

inline MfgSolution solve_mfg(const ProblemSpec& spec, SolverOptions opts = {}) { return MfgSolver(spec, opts).solve(); }

}  // namespace mfg_sl
