#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mfg_sl/coupling.hpp"
#include "mfg_sl/diagnostics.hpp"
#include "mfg_sl/fixedpoint.hpp"

namespace mfg_sl::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kConverged = 0, kError = 1, kCapReached = 2 };

/// Settings of one `run`. Unset overrides fall back to the problem's defaults.
struct RunConfig {
    std::string problem = "test2";
    int preset = 0;
    std::string out;
    std::optional<double> rho, h, eps, sigma, tau;
    std::optional<int> max_iter;
    int snapshot_every = 1;
    int threads = 1;

    bool operator==(const RunConfig&) const = default;
};

inline std::string default_out_dir() {
    if (const char* env = std::getenv("MFG_SL_OUT"); env != nullptr && *env != '\0') return env;
    return "mfg_out";
}

/// Shortest round-trip decimal form, so outputs are byte-stable.
inline std::string fmt(double x) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf.data(), end);
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
    return x;
}

inline int parse_int(const std::string& key, const std::string& v) {
    int x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
    }
    return x;
}

}  // namespace detail

inline void set_field(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_double;
    using detail::parse_int;
    if (key == "problem") cfg.problem = value;
    else if (key == "preset") cfg.preset = parse_int(key, value);
    else if (key == "out") cfg.out = value;
    else if (key == "rho") cfg.rho = parse_double(key, value);
    else if (key == "h") cfg.h = parse_double(key, value);
    else if (key == "eps") cfg.eps = parse_double(key, value);
    else if (key == "sigma") cfg.sigma = parse_double(key, value);
    else if (key == "tau") cfg.tau = parse_double(key, value);
    else if (key == "max_iter") cfg.max_iter = parse_int(key, value);
    else if (key == "snapshot_every") cfg.snapshot_every = parse_int(key, value);
    else if (key == "threads") cfg.threads = parse_int(key, value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

/// Flat `key = value` lines; blank lines and `#` comments are ignored.
inline RunConfig parse_config_text(const std::string& text, RunConfig cfg = {}) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        }
        set_field(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

inline RunConfig load_config_file(const fs::path& path, RunConfig cfg = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), std::move(cfg));
}

inline void validate(const RunConfig& cfg) {
    auto positive = [](const std::optional<double>& v, const char* name) {
        if (v && !(*v > 0.0 && std::isfinite(*v))) throw std::invalid_argument(std::string("--") + name + " must be positive");
    };
    positive(cfg.rho, "rho");
    positive(cfg.h, "h");
    positive(cfg.eps, "eps");
    positive(cfg.sigma, "sigma");
    positive(cfg.tau, "tau");
    if (cfg.max_iter && *cfg.max_iter < 1) throw std::invalid_argument("--max-iter must be positive");
    if (cfg.snapshot_every < 1) throw std::invalid_argument("--snapshot-every must be positive");
    if (cfg.threads < 1) throw std::invalid_argument("--threads must be positive");
}

/// Problem with the config's overrides applied.
inline ProblemSpec make_problem(const RunConfig& cfg) {
    validate(cfg);
    ProblemSpec p = builtin_problem(cfg.problem, cfg.preset);
    if (cfg.rho) p.rho = *cfg.rho;
    if (cfg.h) p.h = *cfg.h;
    if (cfg.eps) p.eps = *cfg.eps;
    if (cfg.sigma) p.sigma = *cfg.sigma;
    if (cfg.tau) p.tau = *cfg.tau;
    if (cfg.max_iter) p.p_max = *cfg.max_iter;
    return p;
}

/// Config with every override filled in from the problem defaults and the output directory resolved.
inline RunConfig effective_config(const RunConfig& cfg) {
    const ProblemSpec p = make_problem(cfg);
    RunConfig e = cfg;
    if (e.out.empty()) e.out = default_out_dir();
    e.rho = p.rho;
    e.h = p.h;
    e.eps = p.eps;
    e.sigma = p.sigma;
    e.tau = p.tau;
    e.max_iter = p.p_max;
    return e;
}

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["problem"] = c.problem;
    j["preset"] = c.preset;
    j["out"] = c.out;
    auto opt = [&](const char* k, const auto& v) { j[k] = v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    opt("rho", c.rho);
    opt("h", c.h);
    opt("eps", c.eps);
    opt("sigma", c.sigma);
    opt("tau", c.tau);
    opt("max_iter", c.max_iter);
    j["snapshot_every"] = c.snapshot_every;
    j["threads"] = c.threads;
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.problem = j.at("problem").get<std::string>();
    c.preset = j.at("preset").get<int>();
    c.out = j.at("out").get<std::string>();
    auto opt_d = [&](const char* k, std::optional<double>& dst) {
        if (j.contains(k) && !j[k].is_null()) dst = j[k].get<double>();
    };
    opt_d("rho", c.rho);
    opt_d("h", c.h);
    opt_d("eps", c.eps);
    opt_d("sigma", c.sigma);
    opt_d("tau", c.tau);
    if (j.contains("max_iter") && !j["max_iter"].is_null()) c.max_iter = j["max_iter"].get<int>();
    c.snapshot_every = j.at("snapshot_every").get<int>();
    c.threads = j.at("threads").get<int>();
    return c;
}

inline std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

inline bool snapshot_level(std::size_t k, std::size_t n_steps, int every) {
    return k % static_cast<std::size_t>(every) == 0 || k == n_steps;
}

inline void write_field_csv(const fs::path& path, const GridSpec& g, const SpaceTimeField& field, int every) {
    auto out = open_out(path);
    out << "k,t,i,x,value\n";
    for (std::size_t k = 0; k < field.size(); ++k) {
        if (!snapshot_level(k, g.n_steps(), every)) continue;
        for (std::size_t i = 0; i < g.n_nodes(); ++i) {
            out << k << ',' << fmt(g.time(k)) << ',' << i << ',' << fmt(g.node(i)) << ',' << fmt(field[k][i]) << '\n';
        }
    }
}

inline void write_mass_csv(const fs::path& path, const GridSpec& g, const MassEvolution& m, int every) {
    auto out = open_out(path);
    out << "k,t,i,x,weight,density\n";
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (!snapshot_level(k, g.n_steps(), every)) continue;
        for (std::size_t i = 0; i < g.n_nodes(); ++i) {
            out << k << ',' << fmt(g.time(k)) << ',' << i << ',' << fmt(g.node(i)) << ',' << fmt(m[k][i]) << ','
                << fmt(m[k][i] / g.rho()) << '\n';
        }
    }
}

inline void write_errors_csv(const fs::path& path, const IterationReport& report) {
    auto out = open_out(path);
    out << "p,E_v,E_m,E_m_density\n";
    for (const auto& r : report.records) {
        out << r.p << ',' << fmt(r.E_v) << ',' << fmt(r.E_m) << ',' << fmt(r.E_m_density) << '\n';
    }
}

inline nlohmann::json summary_json(const RunConfig& eff, const MfgSolver& solver, const MfgSolution& sol,
                                   double wall_seconds) {
    const GridSpec& g = solver.grid();
    const ProblemSpec& p = solver.spec();
    nlohmann::json j;
    j["config"] = to_json(eff);
    j["grid"] = {{"x_lo", g.x_lo()}, {"x_hi", g.x_hi()}, {"rho", g.rho()}, {"h", g.h()},
                 {"T", g.T()},       {"n_nodes", g.n_nodes()}, {"n_steps", g.n_steps()}};
    j["problem"] = {{"name", p.name}, {"theta", p.theta}, {"sigma", p.sigma}, {"eps", p.eps},
                    {"tau", p.tau},   {"p_max", p.p_max}};
    j["status"] = to_string(sol.report.status);
    j["iterations"] = sol.report.iterations();
    const auto& last = sol.report.records.back();
    j["final_errors"] = {{"E_v", last.E_v}, {"E_m", last.E_m}, {"E_m_density", last.E_m_density}};
    j["wall_time_seconds"] = wall_seconds;
    j["diagnostics"] = sol.report.diagnostics;
    return j;
}

/// `run`: solve one problem and write mass/value/gradient/errors CSVs and summary.json.
inline int cmd_run(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
    try {
        const RunConfig eff = effective_config(cfg);
        const auto t0 = std::chrono::steady_clock::now();
        MfgSolver solver(make_problem(eff), SolverOptions{eff.threads, {}});
        for (const auto& w : solver.warnings()) err << "warning: " << w << '\n';
        const MfgSolution sol = solver.solve();
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const fs::path dir(eff.out);
        fs::create_directories(dir);
        const GridSpec& g = solver.grid();
        write_mass_csv(dir / "mass.csv", g, sol.m, eff.snapshot_every);
        write_field_csv(dir / "value.csv", g, sol.v, eff.snapshot_every);
        write_field_csv(dir / "gradient.csv", g, sol.alpha, eff.snapshot_every);
        write_errors_csv(dir / "errors.csv", sol.report);
        open_out(dir / "summary.json") << summary_json(eff, solver, sol, wall).dump(2) << '\n';

        for (std::size_t d = solver.warnings().size(); d < sol.report.diagnostics.size(); ++d) {
            err << "diagnostic: " << sol.report.diagnostics[d] << '\n';
        }
        const auto& last = sol.report.records.back();
        log << eff.problem << ": " << to_string(sol.report.status) << " after " << sol.report.iterations()
            << " iterations (E_v = " << last.E_v << ", E_m = " << last.E_m << "), outputs in " << dir.string() << '\n';
        return sol.report.status == SolveStatus::converged ? kConverged : kCapReached;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    }
}

struct Table1Result {
    Table1Row row;
    double rho = 0.0, h = 0.0;  // effective grid values
    double E_v = 0.0;
    double E_m = 0.0;
    double E_m_density = 0.0;
    int iterations = 0;
};

/// The four test1 parameter rows, 20 fixed-point iterations each without early stopping.
inline std::vector<Table1Result> run_table1(int threads = 1) {
    std::vector<Table1Result> out;
    for (int r = 1; r <= static_cast<int>(kTable1Rows.size()); ++r) {
        ProblemSpec p = builtin_problem("test1", r);
        p.tau = 0.0;
        p.p_max = 20;
        MfgSolver solver(p, SolverOptions{threads, {}});
        const MfgSolution sol = solver.solve();
        const auto& last = sol.report.records.back();
        out.push_back({kTable1Rows[static_cast<std::size_t>(r - 1)], solver.grid().rho(), solver.grid().h(), last.E_v,
                       last.E_m, last.E_m_density, sol.report.iterations()});
    }
    return out;
}

inline int cmd_table1(const std::string& out_dir, int threads, std::ostream& log, std::ostream& err) {
    try {
        const auto rows = run_table1(threads);
        log << "  rho        h          eps        E_v(20)    paper E_v  E_m(20)    E_m/rho    paper E_m\n";
        for (const auto& r : rows) {
            log << std::scientific << std::setprecision(3) << "  " << r.row.rho << "  " << r.row.h << "  " << r.row.eps
                << "  " << r.E_v << "  " << r.row.paper_E_v << "  " << r.E_m << "  " << r.E_m_density << "  "
                << r.row.paper_E_m << '\n';
        }
        log << std::defaultfloat;
        log << "E_m is the sup-norm change of node weights; E_m/rho measures the same change on densities.\n";
        const fs::path dir(out_dir);
        fs::create_directories(dir);
        auto csv = open_out(dir / "table1.csv");
        csv << "row,rho,h,eps,E_v,E_m,E_m_density,paper_E_v,paper_E_m\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            csv << i + 1 << ',' << fmt(r.row.rho) << ',' << fmt(r.row.h) << ',' << fmt(r.row.eps) << ',' << fmt(r.E_v)
                << ',' << fmt(r.E_m) << ',' << fmt(r.E_m_density) << ',' << fmt(r.row.paper_E_v) << ','
                << fmt(r.row.paper_E_m) << '\n';
        }
        return kConverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    }
}

struct LevelStats {
    double rho = 0.0, h = 0.0, eps = 0.0;
    int iterations = 0;
    SolveStatus status = SolveStatus::cap_reached;
    double max_density = 0.0;
    double support_radius = 0.0;
    double time_lipschitz = 0.0;
    double semiconcavity = 0.0;
    /// W1 between this level's final-time mass and the previous level's (NaN on level 0).
    double w1_to_previous = NAN;
};

/**
 * Refinement sequence anchored at the problem's parameters: rho halves,
 * h scales like rho^(4/5) and eps like rho^(2/3), so that rho = o(h),
 * h = o(eps) and rho = O(eps^(3/2)) along the sequence.
 */
inline std::vector<LevelStats> run_convergence(const RunConfig& cfg, int levels) {
    if (levels < 2) throw std::invalid_argument("convergence: need at least 2 levels");
    const ProblemSpec base = make_problem(cfg);
    std::vector<LevelStats> out;
    std::vector<double> prev_x, prev_w;
    for (int l = 0; l < levels; ++l) {
        ProblemSpec p = base;
        p.rho = base.rho * std::pow(0.5, l);
        p.h = base.h * std::pow(0.5, 0.8 * l);
        p.eps = base.eps * std::pow(0.5, 2.0 * l / 3.0);
        MfgSolver solver(p, SolverOptions{cfg.threads, {}});
        const MfgSolution sol = solver.solve();
        const GridSpec& g = solver.grid();
        LevelStats s;
        s.rho = g.rho();
        s.h = g.h();
        s.eps = p.eps;
        s.iterations = sol.report.iterations();
        s.status = sol.report.status;
        s.max_density = max_density(g, sol.m);
        s.support_radius = support_radius(g, sol.m);
        s.time_lipschitz = time_lipschitz(g, sol.m);
        s.semiconcavity = semiconcavity_constant(g, sol.v);
        auto x = node_positions(g);
        const auto& w = sol.m.steps.back();
        if (!prev_x.empty()) s.w1_to_previous = wasserstein1_atoms(prev_x, prev_w, x, w);
        prev_x = std::move(x);
        prev_w = w;
        out.push_back(s);
    }
    return out;
}

inline int cmd_convergence(const RunConfig& cfg, int levels, std::ostream& log, std::ostream& err) {
    try {
        const auto stats = run_convergence(cfg, levels);
        const std::string out_dir = cfg.out.empty() ? default_out_dir() : cfg.out;
        fs::create_directories(out_dir);
        auto csv = open_out(fs::path(out_dir) / "convergence.csv");
        csv << "level,rho,h,eps,iterations,status,max_density,support_radius,time_lipschitz,semiconcavity,w1_to_previous\n";
        log << "level  rho        h          eps        iters  max_dens   supp_rad   time_lip   semiconc   W1(prev)\n";
        for (std::size_t l = 0; l < stats.size(); ++l) {
            const auto& s = stats[l];
            csv << l << ',' << fmt(s.rho) << ',' << fmt(s.h) << ',' << fmt(s.eps) << ',' << s.iterations << ','
                << to_string(s.status) << ',' << fmt(s.max_density) << ',' << fmt(s.support_radius) << ','
                << fmt(s.time_lipschitz) << ',' << fmt(s.semiconcavity) << ','
                << (std::isnan(s.w1_to_previous) ? std::string() : fmt(s.w1_to_previous)) << '\n';
            log << std::scientific << std::setprecision(3) << l << "      " << s.rho << "  " << s.h << "  " << s.eps
                << "  " << std::setw(5) << s.iterations << "  " << s.max_density << "  " << s.support_radius << "  "
                << s.time_lipschitz << "  " << s.semiconcavity << "  ";
            if (std::isnan(s.w1_to_previous)) log << "-";
            else log << s.w1_to_previous;
            log << '\n' << std::defaultfloat;
        }
        return kConverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    }
}

}  // namespace mfg_sl::cli
