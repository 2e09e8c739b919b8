#include <gtest/gtest.h>

#include <random>

#include "pks/fit.hpp"
#include "pks/potential.hpp"
#include "pks/semigroup.hpp"

using namespace pks;

namespace {

RadialField gaussian(int n, double mass, RadialGridPtr grid) {
    return sample_radial(grid, [&](double r) { return mass * gaussian_density(n, r); });
}

RadialField heat(int n, double mass, double t, RadialGridPtr grid) {
    return sample_radial(grid, [&](double r) { return mass * heat_kernel(n, r, t); });
}

RadialField bump(RadialGridPtr grid) {
    return sample_radial(grid, [](double r) { return r < 2.0 ? std::pow(1 - r * r / 4, 3) : 0.0; });
}

}  // namespace

TEST(HeatEvolve, RadialSemigroupProperty) {
    for (int n = 2; n <= 5; ++n) {
        auto grid = make_radial_grid(n, 2048, 30.0);
        const auto out = heat_evolve(heat(n, 2.0, 0.5, grid), 1.5);
        const auto exact = heat(n, 2.0, 2.0, grid);
        EXPECT_LT(lp_norm(abs_difference(out, exact), infinity), 1e-8 * lp_norm(exact, infinity)) << n;
        EXPECT_NEAR(total_mass(out), total_mass(heat(n, 2.0, 0.5, grid)), 1e-10 * 2.0);
    }
    EXPECT_THROW(heat_evolve(gaussian(2, 1, make_radial_grid(2, 64, 5.0)), 0.0), Error);
}

TEST(HeatEvolve, PeakBoundAndMass) {
    auto grid = make_radial_grid(3, 1024, 20.0);
    const auto u0 = bump(grid);
    const double M = total_mass(u0);
    for (double t : {0.1, 1.0, 4.0}) {
        const auto u = heat_evolve(u0, t);
        EXPECT_LE(lp_norm(u, infinity), M * std::pow(4 * pi * t, -1.5) * (1 + 1e-12));
        EXPECT_NEAR(total_mass(u), M, 1e-10 * M);
    }
}

TEST(HeatEvolve, CartesianMatchesHeatKernelAndKeepsCenter) {
    auto cg = make_cartesian_grid(256, 20.0);
    auto u0 = sample_cartesian(cg, [](double x, double y) { return 3 * heat_kernel(2, std::hypot(x - 1, y + 0.5), 0.5); });
    const auto u = heat_evolve(u0, 1.5);
    const auto exact =
        sample_cartesian(cg, [](double x, double y) { return 3 * heat_kernel(2, std::hypot(x - 1, y + 0.5), 2.0); });
    EXPECT_LT(lp_norm(abs_difference(u, exact), infinity), 1e-8 * lp_norm(exact, infinity));
    const auto m0 = moments(u0), m1 = moments(u);
    EXPECT_NEAR(m1.center[0], m0.center[0], 1e-10);
    EXPECT_NEAR(m1.center[1], m0.center[1], 1e-10);
}

TEST(SimilaritySemigroup, GaussianIsFixed) {
    for (int n = 2; n <= 5; ++n) {
        auto grid = make_radial_grid(n, 2048, 30.0);
        const auto g = gaussian(n, 1.0, grid);
        for (double tau : {0.5, 1.0, 5.0}) EXPECT_LT(l1_distance(similarity_semigroup(g, tau), g), 1e-8) << n << " " << tau;
    }
    auto cg = make_cartesian_grid(128, 16.0);
    auto g2 = sample_cartesian(cg, [](double x, double y) { return gaussian_density(2, std::hypot(x, y)); });
    for (double tau : {0.5, 1.0, 5.0}) EXPECT_LT(l1_distance(similarity_semigroup(g2, tau), g2), 1e-8);
}

TEST(SimilaritySemigroup, LongTimeLimitAndMass) {
    for (int n : {2, 3, 5}) {
        auto grid = make_radial_grid(n, 2048, 30.0);
        const auto f = bump(grid);
        const double M = total_mass(f);
        const auto s = similarity_semigroup(f, 20.0);
        EXPECT_LT(l1_distance(s, gaussian(n, M, grid)), 1e-6);
        EXPECT_NEAR(total_mass(similarity_semigroup(f, 0.7)), M, 1e-12 * M);
    }
    EXPECT_THROW(similarity_semigroup(bump(make_radial_grid(2, 64, 5.0)), -1.0), Error);
}

TEST(SimilaritySemigroup, SemigroupLaw) {
    for (int n : {2, 3, 4}) {
        auto grid = make_radial_grid(n, 2048, 30.0);
        const auto f = bump(grid);
        const auto a = similarity_semigroup(similarity_semigroup(f, 0.4), 0.9);
        const auto b = similarity_semigroup(f, 1.3);
        EXPECT_LT(l1_distance(a, b), 1e-7) << n;
    }
    auto cg = make_cartesian_grid(128, 16.0);
    auto f = sample_cartesian(cg, [](double x, double y) { return std::exp(-(x - 1) * (x - 1) - 2 * y * y); });
    EXPECT_LT(l1_distance(similarity_semigroup(similarity_semigroup(f, 0.4), 0.9), similarity_semigroup(f, 1.3)), 1e-7);
}

TEST(SimilaritySemigroup, ConjugateToHeatFlow) {
    // f read as data at t = 1: S_n(tau) f = U(., tau) for the heat flow started there.
    for (int n : {2, 3}) {
        auto grid = make_radial_grid(n, 4096, 40.0);
        const auto f = bump(grid);
        for (double tau : {0.5, 1.0}) {
            const auto via_heat = to_similarity(heat_evolve(f, std::exp(tau) - 1.0), std::exp(tau));
            EXPECT_LT(l1_distance(via_heat.field, similarity_semigroup(f, tau)), 1e-7) << n << " " << tau;
        }
    }
}

TEST(FirstOrderExpansion, RadialGaussianIsExact) {
    auto grid = make_radial_grid(3, 2048, 30.0);
    const auto f = gaussian(3, 2.0, grid);
    EXPECT_LT(l1_distance(first_order_heat_expansion(f, 2.0), f), 1e-12);
}

TEST(FirstOrderExpansion, ShiftedGaussianRate) {
    auto cg = make_cartesian_grid(128, 16.0);
    auto f = sample_cartesian(cg, [](double x, double y) { return gaussian_density(2, std::hypot(x - 1.0, y - 0.5)); });
    std::vector<double> taus, errs;
    for (double tau = 2.0; tau <= 8.0 + 1e-9; tau += 0.5) {
        taus.push_back(tau);
        errs.push_back(l1_distance(similarity_semigroup(f, tau), first_order_heat_expansion(f, tau)));
    }
    const auto fit = fit_exponential(taus, errs);
    EXPECT_GE(fit.slope, 0.95);
}

TEST(FirstOrderExpansion, ZeroMassKeepsDipoleOnly) {
    auto cg = make_cartesian_grid(128, 16.0);
    auto f = sample_cartesian(cg, [](double x, double y) {
        return gaussian_density(2, std::hypot(x - 1.0, y)) - gaussian_density(2, std::hypot(x + 1.0, y));
    });
    const auto e = first_order_heat_expansion(f, 1.0);
    const double r = std::exp(-0.5);
    const auto expect = sample_cartesian(cg, [&](double x, double y) {
        return r * 0.5 * (2.0 * x) * gaussian_density(2, std::hypot(x, y));
    });
    EXPECT_LT(l1_distance(e, expect), 1e-10);
}

TEST(NullConditions, GaussianDivergence) {
    // div(G grad V) = G' V' - G^2 for radial data.
    for (int n = 2; n <= 5; ++n) {
        auto grid = make_radial_grid(n);
        const auto g = gaussian(n, 1.0, grid);
        const auto dv = radial_gradient(g).values;
        RadialField div(grid);
        for (std::size_t i = 0; i < grid->size(); ++i) {
            const double r = grid->node(i);
            div[i] = -0.5 * r * g[i] * dv[i] - g[i] * g[i];
        }
        EXPECT_LT(std::fabs(integrate(div)), 1e-8) << n;
    }
}

TEST(KernelTaylor, OriginAndCoefficient) {
    for (int n = 2; n <= 5; ++n) {
        std::vector<double> zero(n, 0.0);
        const auto k = kernel_taylor_terms(zero, zero, 3.0, n);
        EXPECT_DOUBLE_EQ(k.t0, 1.0);
        EXPECT_EQ(k.t1, 0.0);
        EXPECT_NEAR(k.coefficients[2], 0.5 * n, 1e-14);
        // the closed form is twice the series value at the origin
        EXPECT_NEAR(k.t2_closed_form / k.t2, 2.0, 1e-12);
        // finite difference in r = e^{-s/2} of (1-r^2)^{-n/2} at r = 0
        const double h = 1e-3;
        const double fd = (std::pow(1 - h * h, -0.5 * n) - 2 + std::pow(1 - h * h, -0.5 * n)) / (h * h) / 2;
        EXPECT_NEAR(k.coefficients[2], fd, 1e-5);
    }
    std::vector<double> xi{1, 0, 0}, z{0, 0, 0};
    EXPECT_EQ(kernel_taylor_terms(xi, z, 2.0, 3).t1, 0.0);
    try {
        kernel_taylor_terms(xi, z, 0.5, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OutOfValidatedRange);
    }
}

TEST(KernelTaylor, RemainderRates) {
    std::vector<double> zero(3, 0.0), ss, rem;
    for (double s = 2.0; s <= 10.0 + 1e-9; s += 0.5) {
        ss.push_back(s);
        rem.push_back(std::fabs(kernel_taylor_terms(zero, zero, s, 3).remainder));
    }
    EXPECT_NEAR(fit_exponential(ss, rem).slope, 2.0, 0.05);

    std::mt19937_64 rng(1);
    for (int n = 2; n <= 5; ++n) {
        const auto fit = fit_taylor_remainder(n, 20, 2.0, 10.0, rng);
        EXPECT_TRUE(fit.all_within_envelope);
        EXPECT_GE(fit.ensemble_exponent, 1.4) << n;
        EXPECT_LT(fit.ensemble_exponent, 2.0) << n;
    }
}
