#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfg_sl/coupling.hpp"
#include "mfg_sl/grid.hpp"

using namespace mfg_sl;

TEST(BuildGrid, ExactDivision) {
    const auto g = build_grid(0, 1, 0.5, 0.5, 1);
    EXPECT_EQ(g.n_nodes(), 3u);
    EXPECT_EQ(g.n_steps(), 2u);
    EXPECT_DOUBLE_EQ(g.node(1), 0.5);
    EXPECT_DOUBLE_EQ(g.time(2), 1.0);
}

TEST(BuildGrid, Test1RowOne) {
    const auto g = build_grid(-0.1, 1.1, 0.015, 0.03, 1);
    EXPECT_EQ(g.n_nodes(), 81u);
    EXPECT_EQ(g.n_steps(), 33u);
    EXPECT_NEAR(g.h() * static_cast<double>(g.n_steps()), 1.0, 1e-15);
    EXPECT_NEAR(g.rho(), 0.015, 1e-12 * 0.015);
}

TEST(BuildGrid, AdjustsSpacing) {
    const auto g = build_grid(0, 1, 0.3, 0.5, 1);
    EXPECT_EQ(g.n_nodes(), 4u);
    EXPECT_DOUBLE_EQ(g.rho(), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(g.node(3), 1.0);
    for (std::size_t i = 0; i + 1 < g.n_nodes(); ++i) EXPECT_NEAR(g.node(i + 1) - g.node(i), g.rho(), 1e-15);
}

TEST(BuildGrid, Errors) {
    EXPECT_THROW(build_grid(0, 1, 0, 0.1, 1), std::invalid_argument);
    EXPECT_THROW(build_grid(0, 1, -0.1, 0.1, 1), std::invalid_argument);
    EXPECT_THROW(build_grid(0, 1, 0.1, 0, 1), std::invalid_argument);
    EXPECT_THROW(build_grid(0, 1, 0.1, 0.1, -1), std::invalid_argument);
    EXPECT_THROW(build_grid(0, 0.15, 0.1, 0.1, 1), std::invalid_argument);
    EXPECT_THROW(build_grid(0, 1, NAN, 0.1, 1), std::invalid_argument);
}

TEST(BuildGrid, LevelOfUsesFloor) {
    const auto g = build_grid(0, 1, 0.1, 0.25, 1);
    EXPECT_EQ(g.level_of(0.0), 0u);
    EXPECT_EQ(g.level_of(0.5), 2u);
    EXPECT_EQ(g.level_of(0.5 + 0.125), 2u);
    EXPECT_EQ(g.level_of(1.0), 4u);
    EXPECT_THROW(g.level_of(1.5), std::out_of_range);
}

TEST(Basis, Kronecker) {
    const auto g = build_grid(0, 1, 0.1, 0.5, 1);
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        for (std::size_t j = 0; j < g.n_nodes(); ++j) EXPECT_EQ(basis_eval(g, i, g.node(j)), i == j ? 1.0 : 0.0);
    }
    EXPECT_DOUBLE_EQ(basis_eval(g, 4, g.node(4) + 0.05), 0.5);
    EXPECT_EQ(basis_eval(g, 4, g.node(4) + 0.2), 0.0);
    EXPECT_THROW(basis_eval(g, 11, 0.5), std::out_of_range);
}

TEST(Basis, PartitionOfUnity) {
    const auto g = build_grid(-0.1, 1.1, 0.015, 0.03, 1);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(g.x_lo(), g.x_hi());
    double worst = 0.0;
    for (int s = 0; s < 10000; ++s) {
        const double x = u(rng);
        double sum = 0.0;
        for (std::size_t i = 0; i < g.n_nodes(); ++i) {
            const double b = basis_eval(g, i, x);
            EXPECT_GE(b, 0.0);
            EXPECT_LE(b, 1.0);
            sum += b;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    EXPECT_LE(worst, 1e-12);
}

TEST(Interpolate, ConstantAndNodes) {
    const auto g = build_grid(0, 2, 0.1, 0.5, 1);
    const NodeField c(g.n_nodes(), 3.25);
    for (double x : {-5.0, 0.0, 0.37, 1.99, 7.0}) EXPECT_EQ(interpolate(g, c, x), 3.25);
    const auto f = sample(g, [](double x) { return std::sin(3 * x); });
    for (std::size_t j = 0; j < g.n_nodes(); ++j) EXPECT_EQ(interpolate(g, f, g.node(j)), f[j]);
}

TEST(Interpolate, AffineReproduction) {
    const auto g = build_grid(-0.1, 1.1, 0.0037, 0.01, 1);
    const auto f = sample(g, [](double x) { return -2.5 * x + 0.7; });
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(g.x_lo(), g.x_hi());
    for (int s = 0; s < 10000; ++s) {
        const double x = u(rng);
        EXPECT_NEAR(interpolate(g, f, x), -2.5 * x + 0.7, 1e-12);
    }
}

TEST(Interpolate, ConstantExtensionOutsideHull) {
    const auto g = build_grid(0, 1, 0.1, 0.5, 1);
    const auto f = sample(g, [](double x) { return x * x; });
    EXPECT_EQ(interpolate(g, f, -3.0), f.front());
    EXPECT_EQ(interpolate(g, f, 4.0), f.back());
}

TEST(Interpolate, Monotone) {
    const auto g = build_grid(0, 1, 0.02, 0.5, 1);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1), d(0, 1), x(-0.5, 1.5);
    for (int s = 0; s < 1000; ++s) {
        NodeField f(g.n_nodes()), h(g.n_nodes());
        for (std::size_t i = 0; i < f.size(); ++i) {
            f[i] = u(rng);
            h[i] = f[i] + d(rng);
        }
        const double y = x(rng);
        EXPECT_LE(interpolate(g, f, y), interpolate(g, h, y));
    }
}

TEST(CellIntegral, Examples) {
    const auto g = build_grid(0, 1, 0.01, 0.5, 1);
    EXPECT_NEAR(cell_integral(g, [](double) { return 1.0; }, 30), g.rho(), 1e-16);
    EXPECT_NEAR(cell_integral(g, [](double x) { return x; }, 30), g.rho() * g.node(30), 1e-16);
    EXPECT_THROW(cell_integral(g, [](double) { return NAN; }, 3), std::domain_error);
    EXPECT_THROW(cell_integral(g, [](double) { return 1.0; }, 101), std::out_of_range);
}

TEST(CellIntegral, GaussianPeakCellAgainstRiemannOracle) {
    const auto spec = builtin_problem("test2");
    const auto g = spec.grid();
    const auto i = static_cast<std::size_t>(std::lround((0.75 - g.x_lo()) / g.rho()));
    const double a = g.node(i) - 0.5 * g.rho();
    constexpr int n = 1000000;
    const double dx = g.rho() / n;
    CompensatedSum acc;
    for (int s = 0; s < n; ++s) acc.add(spec.m0(a + (s + 0.5) * dx));
    const double oracle = acc.value() * dx;
    EXPECT_NEAR(cell_integral(g, spec.m0, i) / oracle, 1.0, 1e-8);
}

TEST(CellIntegral, SumsToTotalMass) {
    const auto spec = builtin_problem("test1", 1);
    const auto g = spec.grid();
    double total = 0.0;
    for (std::size_t i = 0; i < g.n_nodes(); ++i) total += cell_integral(g, spec.m0, i, spec.m0_breakpoints);
    EXPECT_NEAR(total, 1.0, 1e-8);

    const auto spec2 = builtin_problem("test2");
    const auto g2 = spec2.grid();
    // Half of the outermost cells lie outside [0, 1] where m0 vanishes.
    total = 0.0;
    for (std::size_t i = 0; i < g2.n_nodes(); ++i) total += cell_integral(g2, spec2.m0, i, spec2.m0_breakpoints);
    EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(DiscreteLipschitz, Slope) {
    const auto g = build_grid(0, 1, 0.1, 0.5, 1);
    EXPECT_NEAR(discrete_lipschitz(g, sample(g, [](double x) { return -3 * x + 1; })), 3.0, 1e-12);
}
