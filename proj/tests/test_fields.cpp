#include <gtest/gtest.h>

#include <random>

#include "pks/fields.hpp"

using namespace pks;

namespace {

RadialField gaussian(int n, double mass, RadialGridPtr grid) {
    return sample_radial(grid, [&](double r) { return mass * gaussian_density(n, r); });
}

}  // namespace

TEST(RadialGrid, WeightsIntegrateConstant) {
    for (auto kind : {GridKind::uniform, GridKind::graded}) {
        RadialGrid g(2, 1000, 7.5, kind);
        double s = 0.0;
        for (double w : g.line_weights()) s += w;
        EXPECT_NEAR(s, 7.5, 7.5 * 1e-12);
    }
}

TEST(Fields, GaussianMass) {
    auto grid = make_radial_grid(2);
    EXPECT_NEAR(total_mass(gaussian(2, 4 * pi, grid)), 4 * pi, 1e-8);
    EXPECT_EQ(total_mass(RadialField(grid)), 0.0);
}

TEST(Fields, UnitDiskArea) {
    auto grid = make_radial_grid(2, 20001, 2.0, GridKind::uniform);
    auto disk = sample_radial(grid, [](double r) { return r < 1.0 ? 1.0 : (r == 1.0 ? 0.5 : 0.0); });
    EXPECT_NEAR(total_mass(disk), pi, 1e-9);
}

TEST(Fields, NonFiniteRejected) {
    auto grid = make_radial_grid(3, 64, 5.0);
    std::vector<double> v(64, 0.0);
    v[3] = std::nan("");
    EXPECT_THROW(RadialField(grid, v), Error);
}

TEST(Fields, LpNorms) {
    auto grid = make_radial_grid(3);
    auto g3 = gaussian(3, 2.0, grid);
    EXPECT_DOUBLE_EQ(lp_norm(g3, infinity), 2.0 * std::pow(4 * pi, -1.5));
    EXPECT_NEAR(lp_norm(g3, 1.0), total_mass(g3), 1e-14);
    auto g2 = gaussian(2, 1.0, make_radial_grid(2));
    // int G_2^2 = (4 pi)^{-2} 2 pi int r e^{-r^2/2} dr = 1 / (8 pi)
    EXPECT_NEAR(std::pow(lp_norm(g2, 2.0), 2), 1.0 / (8 * pi), 1e-12);
    try {
        lp_norm(g2, 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidParameter);
    }
}

TEST(Fields, HolderInterpolation) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto grid = make_radial_grid(2, 512, 10.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double c = 3 * U(rng), w = 0.3 + U(rng), amp = 0.1 + 5 * U(rng);
        auto f = sample_radial(grid, [&](double r) { return amp * std::exp(-(r - c) * (r - c) / w); });
        for (double p : {1.5, 2.0, 4.0}) {
            const double lhs = lp_norm(f, p);
            const double rhs = std::pow(lp_norm(f, 1), 1 / p) * std::pow(lp_norm(f, infinity), 1 - 1 / p);
            EXPECT_LE(lhs, rhs * (1 + 1e-12));
        }
        const auto m = moments(f);
        EXPECT_GE(m.second_moment * m.mass, 0.0);
    }
}

TEST(Fields, GaussianMoments) {
    for (int n = 2; n <= 5; ++n) {
        auto m = moments(gaussian(n, 1.0, make_radial_grid(n)));
        EXPECT_NEAR(m.second_moment, 2.0 * n, 1e-9) << n;
    }
    auto m4 = moments(gaussian(4, 2.0, make_radial_grid(4)));
    EXPECT_NEAR(m4.mass, 2.0, 1e-10);
    EXPECT_NEAR(m4.second_moment, 16.0, 1e-9);
}

TEST(Fields, ShiftedCartesianCenter) {
    auto grid = make_cartesian_grid(256, 20.0);
    auto f = sample_cartesian(grid, [](double x, double y) { return gaussian_density(2, std::hypot(x - 1, y)); });
    const auto m = moments(f);
    EXPECT_NEAR(m.mass, 1.0, 1e-12);
    EXPECT_NEAR(m.center[0], 1.0, 1e-12);
    EXPECT_NEAR(m.center[1], 0.0, 1e-12);
    EXPECT_GE(m.second_moment, (m.center[0] * m.center[0] + m.center[1] * m.center[1]) / m.mass);
}

TEST(Fields, ClampPolicy) {
    auto grid = make_radial_grid(2, 64, 5.0);
    RadialField f(grid, std::vector<double>(64, 1.0));
    f[5] = -1e-13;
    enforce_density(f);
    EXPECT_EQ(f[5], 0.0);
    f[6] = -1e-6;
    EXPECT_THROW(enforce_density(f), Error);
}

TEST(Similarity, HeatKernelAtUnitTimeIsGaussian) {
    for (int n = 2; n <= 5; ++n) {
        auto grid = make_radial_grid(n);
        auto u = sample_radial(grid, [&](double r) { return 3.0 * heat_kernel(n, r, 1.0); });
        auto s = to_similarity(u, 1.0);
        EXPECT_EQ(s.tau, 0.0);
        EXPECT_LT(l1_distance(s.field, gaussian(n, 3.0, grid)), 1e-13);
    }
}

TEST(Similarity, RoundTripAndMass) {
    for (int n = 2; n <= 5; ++n) {
        auto grid = make_radial_grid(n);
        for (double t : {0.1, 1.0, 10.0}) {
            auto u = sample_radial(grid, [&](double r) { return 2.0 * heat_kernel(n, r, t); });
            const auto s = to_similarity(u, t);
            EXPECT_NEAR(total_mass(s.field), total_mass(u), 1e-6 * total_mass(u)) << n << " " << t;
            auto [back, t2] = from_similarity(s);
            EXPECT_NEAR(t2, t, 1e-14 * t);
            EXPECT_LT(l1_distance(back, u), 1e-6 * total_mass(u));
        }
    }
    auto cg = make_cartesian_grid(256, 20.0);
    for (double t : {0.5, 1.0, 2.0}) {
        auto u = sample_cartesian(cg, [&](double x, double y) { return heat_kernel(2, std::hypot(x - 0.5, y), t); });
        const auto s = to_similarity(u, t);
        EXPECT_NEAR(total_mass(s.field), 1.0, 1e-6);
        auto [back, t2] = from_similarity(s);
        EXPECT_LT(l1_distance(back, u), 1e-5);
    }
    EXPECT_THROW(to_similarity(RadialField(make_radial_grid(2, 64, 4.0)), 0.0), Error);
}
