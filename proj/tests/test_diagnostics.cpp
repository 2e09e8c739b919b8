#include <gtest/gtest.h>

#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_gamma.h>

#include <random>
#include <sstream>

#include "pks/diagnostics.hpp"
#include "pks/profiles.hpp"

using namespace pks;

namespace {

RadialField heat(int n, double mass, double t, RadialGridPtr grid) {
    return sample_radial(grid, [&](double r) { return mass * heat_kernel(n, r, t); });
}

RadialTrajectory run(double mass, double t_end, bool nonlinear, int per_decade = 256) {
    auto grid = make_radial_grid(2, 2048, 40.0);
    SolverConfig cfg;
    cfg.t_end = t_end;
    cfg.nonlinear = nonlinear;
    cfg.records_per_decade = per_decade;
    return evolve(heat(2, mass, 1.0, grid), cfg);
}

}  // namespace

TEST(FreeEnergy, ZeroField) {
    auto grid = make_radial_grid(2, 512, 20.0);
    EXPECT_EQ(free_energy_2d(RadialField(grid)).value, 0.0);
}

TEST(FreeEnergy, DoublingByRecomputation) {
    auto grid = make_radial_grid(2, 2048, 30.0);
    const auto w = sample_radial(grid, [](double r) { return 2.0 * std::exp(-r * r / 3) * (1 + 0.3 * std::cos(r)); });
    const auto w2 = rescale(w, 2.0, 1.0);
    const auto f1 = free_energy_2d(w), f2 = free_energy_2d(w2);
    const double m = total_mass(w);
    EXPECT_NEAR(f2.entropy - 2 * f1.entropy, 2 * m * std::log(2.0), 1e-10 * std::fabs(f2.entropy));
    EXPECT_NEAR(f2.confinement, 2 * f1.confinement, 1e-12 * f2.confinement);
    EXPECT_NEAR(f2.interaction, 4 * f1.interaction, 1e-12 * std::fabs(f2.interaction));
    EXPECT_NEAR(f2.value - 2 * f1.value, 2 * m * std::log(2.0) + 2 * f1.interaction, 1e-9 * std::fabs(f2.value));
}

TEST(FreeEnergy, ProfileBelowGaussian) {
    auto grid = make_radial_grid(2, 2048, 40.0);
    const double m = 4 * pi;
    const auto prof = self_similar_profile_2d(m, grid);
    EXPECT_LT(free_energy_2d(prof.field).absolute, free_energy_2d(heat(2, m, 1.0, grid)).absolute);
}

TEST(FreeEnergy, CartesianMatchesRadial) {
    auto cg = make_cartesian_grid(256, 16.0);
    auto rg = make_radial_grid(2, 2048, 30.0);
    const double m = 3.0;
    const auto c = sample_cartesian(cg, [&](double x, double y) { return m * heat_kernel(2, std::hypot(x, y), 1.0); });
    const auto fc = free_energy_2d(c), fr = free_energy_2d(heat(2, m, 1.0, rg));
    EXPECT_NEAR(fc.value, fr.value, 1e-5 * std::fabs(fr.value));
    EXPECT_NEAR(fc.gauge_constant, fr.gauge_constant, 1e-5);
}

TEST(FreeEnergy, UnresolvedSecondMoment) {
    auto grid = make_radial_grid(2, 512, 10.0);
    const auto w = sample_radial(grid, [](double r) { return 1.0 / (1 + r * r * r); });
    try {
        free_energy_2d(w);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DivergentMoment);
    }
}

TEST(RelativeEntropy, VanishesAtGaussian) {
    for (int n = 2; n <= 5; ++n) {
        auto grid = make_radial_grid(n, 2048, 30.0);
        EXPECT_NEAR(relative_entropy(heat(n, 2.5, 1.0, grid), 0.0).entropy_part, 0.0, 1e-10) << n;
    }
}

TEST(RelativeEntropy, NonnegativeOnRandomFields) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + k % 3;
        auto grid = make_radial_grid(n, 1024, 30.0);
        const double a = 0.3 + 2 * U(rng), b = 3 * U(rng), c = 0.5 + 2 * U(rng);
        const auto w = sample_radial(grid, [&](double r) { return a * std::exp(-r * r / (2 * c)) * (1 + b * r * r); });
        EXPECT_GE(relative_entropy(w, 0.0).entropy_part, 0.0) << k;
    }
}

TEST(RelativeEntropy, FieldEnergyOfGaussian3D) {
    // (1/2) int |grad E_3 * (M G_3)|^2 = (M^2 / 8 pi) int_0^inf P(3/2, r^2/4)^2 / r^2 dr
    const double m = 1.7;
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(1000);
    gsl_function fn;
    fn.function = [](double r, void*) {
        const double p = gsl_sf_gamma_inc_P(1.5, r * r / 4);
        return r > 0 ? p * p / (r * r) : 0.0;
    };
    fn.params = nullptr;
    double value = 0, err = 0;
    gsl_integration_qagiu(&fn, 0.0, 1e-13, 1e-13, 1000, ws, &value, &err);
    gsl_integration_workspace_free(ws);
    const double oracle = m * m / (8 * pi) * value;
    auto grid = make_radial_grid(3, 4096, 40.0);
    const auto h = relative_entropy(heat(3, m, 1.0, grid), 0.0);
    EXPECT_NEAR(h.total, oracle, 1e-6 * oracle);
    EXPECT_FALSE(h.field_energy_truncated);
}

TEST(Phi, PureHeatClosedForm) {
    const double m = 4 * pi;
    const auto traj = run(m, 2.5, false);
    const PhiPoint z{{}, 2.5};
    for (double rho : {0.1, 0.3, 0.6, 1.0, 1.2}) {
        const double expect = m * rho * rho / (4 * pi * z.s1);
        const double phi = phi_density(traj, z, rho);
        EXPECT_NEAR(phi / expect, 1.0, 1e-4) << rho;
        EXPECT_LE(phi, m / (4 * pi));
    }
    try {
        phi_density(traj, z, 1.3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
    }
}

TEST(Phi, OffCentreRadialMatchesCartesian) {
    const double m = 2.0;
    auto rg = make_radial_grid(2, 2048, 40.0);
    auto cg = make_cartesian_grid(256, 16.0);
    SolverConfig cfg;
    cfg.t_end = 2.0;
    cfg.nonlinear = false;
    const auto tr = evolve(heat(2, m, 1.0, rg), cfg);
    const auto tc = evolve(
        sample_cartesian(cg, [&](double x, double y) { return m * heat_kernel(2, std::hypot(x, y), 1.0); }), cfg);
    const double a = phi_density(tr, PhiPoint{{0.8}, 2.0}, 0.5);
    const double b = phi_density(tc, PhiPoint{{0.0, 0.8}, 2.0}, 0.5);
    EXPECT_NEAR(a / b, 1.0, 1e-6);
}

TEST(Phi, MonotonicityMargins) {
    std::vector<double> rho;
    for (int i = 0; i <= 18; ++i) rho.push_back(0.1 + 0.05 * i);
    const PhiPoint z{{}, 2.5};
    const double m = 4 * pi;
    const auto heat_scan = phi_monotonicity_check(run(m, 2.5, false), z, rho);
    for (std::size_t i = 0; i < rho.size(); ++i)
        EXPECT_NEAR(heat_scan.margin[i], m / (8 * pi) * 2 / rho[i] * heat_scan.phi[i], 2e-3 * heat_scan.phi[i] / rho[i]);
    const auto scan = phi_monotonicity_check(run(m, 2.5, true), z, rho);
    EXPECT_GE(scan.min_relative_margin, -1e-3);

    const auto tiny = phi_monotonicity_check(run(1e-6, 2.5, false, 128), z, rho);
    EXPECT_GT(tiny.min_relative_margin, -1e-3);
    EXPECT_LT(tiny.min_relative_margin, 1e-3);
    std::ostringstream os;
    write_phi_csv(os, scan);
    EXPECT_EQ(os.str().substr(0, 15), "rho,phi,margin\n");
}

TEST(DecayEnvelope, HeatBoundAndBlowup) {
    const double m = 2.0;
    const auto traj = run(m, 10.0, false, 32);
    double bound = 0;
    for (const auto& r : traj.records) bound = std::max(bound, m * (1 + r.t) / (4 * pi * r.t));
    EXPECT_LE(decay_envelope(traj), bound * (1 + 1e-6));
    RadialTrajectory bad = traj;
    bad.blowup = true;
    try {
        decay_envelope(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BlowupTrajectory);
    }
}

TEST(Diagnostics, TableAndVirial) {
    const double m = 2 * pi;
    const auto traj = run(m, 5.0, true, 32);
    EXPECT_NEAR(virial_fit(traj).slope / virial_rate_2d(m), 1.0, 0.01);
    const auto rows = diagnostics_table(traj);
    ASSERT_EQ(rows.size(), traj.records.size());
    for (const auto& d : rows) {
        EXPECT_TRUE(std::isfinite(d.free_energy_2d));
        EXPECT_TRUE(std::isfinite(d.relative_entropy));
        EXPECT_NEAR(d.virial_slope_running / virial_rate_2d(m), 1.0, 0.02);
    }
}
