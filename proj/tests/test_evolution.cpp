#include <gtest/gtest.h>

#include <sstream>

#include "pks/evolution.hpp"
#include "pks/fit.hpp"
#include "pks/profiles.hpp"

using namespace pks;

namespace {

RadialField heat(int n, double mass, double t, RadialGridPtr grid) {
    return sample_radial(grid, [&](double r) { return mass * heat_kernel(n, r, t); });
}

double virial_rate(double m) { return 4.0 * m * (1.0 - m / (8.0 * pi)); }

}  // namespace

TEST(Step, HeatOnlyIsExact) {
    auto grid = make_radial_grid(2, 2048, 30.0);
    SolverConfig cfg;
    cfg.nonlinear = false;
    const auto out = step(heat(2, 3.0, 1.0, grid), 0.25, cfg);
    const auto exact = heat(2, 3.0, 1.25, grid);
    EXPECT_LT(sup_norm(abs_difference(out, exact).values()), 1e-8 * sup_norm(exact.values()));
}

TEST(Step, RejectsCflViolation) {
    auto grid = make_radial_grid(2, 1024, 20.0);
    SolverConfig cfg;
    try {
        step(heat(2, 4 * pi, 1.0, grid), 10.0, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StepRejected);
    }
}

TEST(Step, MassDriftOverThousandSteps) {
    auto grid = make_radial_grid(2, 1024, 30.0);
    SolverConfig cfg;
    auto u = heat(2, 4 * pi, 1.0, grid);
    const double m0 = total_mass(u);
    for (int k = 0; k < 1000; ++k) u = step(u, 2e-3, cfg);
    EXPECT_LT(std::fabs(total_mass(u) - m0) / m0, 1e-7);
}

TEST(Step, CartesianHeatOnlyIsExact) {
    auto grid = make_cartesian_grid(128, 16.0);
    auto g = [&](double t) {
        return sample_cartesian(grid, [&](double x, double y) { return 2.0 * heat_kernel(2, std::hypot(x - 0.5, y), t); });
    };
    SolverConfig cfg;
    cfg.nonlinear = false;
    const auto out = step(g(1.0), 0.5, cfg);
    EXPECT_LT(sup_norm(abs_difference(out, g(1.5)).values()), 1e-8 * sup_norm(g(1.5).values()));
}

TEST(Evolve, SmallMassTracksHeat) {
    auto grid = make_radial_grid(2, 2048, 40.0);
    SolverConfig cfg;
    cfg.t_end = 10.0;
    const double m = 1e-6;
    const auto traj = evolve(heat(2, m, 1.0, grid), cfg);
    ASSERT_FALSE(traj.blowup);
    for (const auto& r : traj.records) EXPECT_LT(r.l1_err_vs_profile / m, 1e-6) << r.t;
}

TEST(Evolve, RecordsAreLogSpacedAndConserveMass) {
    auto grid = make_radial_grid(2, 2048, 60.0);
    SolverConfig cfg;
    cfg.t_end = 10.0;
    const auto traj = evolve(heat(2, 4 * pi, 1.0, grid), cfg);
    ASSERT_EQ(traj.records.size(), 33u);
    EXPECT_NEAR(traj.records.back().t, 10.0, 1e-12);
    for (std::size_t k = 1; k < traj.records.size(); ++k) {
        EXPECT_GT(traj.records[k].t, traj.records[k - 1].t);
        const double m0 = traj.records[k - 1].moments.mass, m1 = traj.records[k].moments.mass;
        EXPECT_LT(std::fabs(m1 - m0) / m0, 1e-7);
    }
}

TEST(Evolve, VirialLawRadial) {
    auto grid = make_radial_grid(2, 2048, 60.0);
    for (double m : {2 * pi, 4 * pi, 6 * pi}) {
        SolverConfig cfg;
        cfg.t_end = 5.0;
        const auto traj = evolve(heat(2, m, 1.0, grid), cfg);
        std::vector<double> t, m2;
        for (const auto& r : traj.records) {
            t.push_back(r.t);
            m2.push_back(r.moments.second_moment);
        }
        const auto fit = fit_line(t, m2);
        EXPECT_NEAR(fit.slope / virial_rate(m), 1.0, 0.01) << m;
    }
}

TEST(Evolve, SupercriticalBlowsUpBeforeVirialTime) {
    auto grid = make_radial_grid(2, 4096, 40.0);
    SolverConfig cfg;
    cfg.t_end = 20.0;
    const double m = 10 * pi;
    const auto u0 = heat(2, m, 1.0, grid);
    const double vanishing = moments(u0).second_moment / std::fabs(virial_rate(m));
    const auto traj = evolve(u0, cfg);
    ASSERT_TRUE(traj.blowup);
    EXPECT_LT(traj.blowup_time - 1.0, 1.2 * vanishing);
    EXPECT_FALSE(traj.records.empty());
}

TEST(EvolveSimilarity, WeightFunction) {
    EXPECT_DOUBLE_EQ(similarity_weight(2, 3.0), 1.0);
    EXPECT_NEAR(similarity_weight(4, 1.0), std::exp(-1.0), 1e-15);
}

TEST(EvolveSimilarity, ProfileIsStationary) {
    auto grid = make_radial_grid(2, 2048, 40.0);
    const auto prof = self_similar_profile_2d(4 * pi, grid);
    SolverConfig cfg;
    cfg.t_start = 0.0;
    cfg.t_end = 5.0;
    cfg.dt_initial = 0.02;
    cfg.record_interval = 0.25;
    const auto traj = evolve_similarity(prof.field, cfg, std::function<RadialField(double)>([&](double) { return prof.field; }));
    for (const auto& r : traj.records) EXPECT_LT(r.l1_err_vs_profile, 1e-4) << r.t;
}

TEST(EvolveSimilarity, SmallMassApproachesGaussianAtHalfRate) {
    auto grid = make_radial_grid(3, 2048, 40.0);
    const double m = 0.05;
    const auto u0 = sample_radial(grid, [&](double r) { return m * heat_kernel(3, r, 1.0); });
    SolverConfig cfg;
    cfg.t_start = 0.0;
    cfg.t_end = 12.0;
    cfg.dt_initial = 0.02;
    cfg.record_interval = 0.25;
    const auto traj = evolve_similarity(u0, cfg);
    std::vector<double> tau, err;
    for (const auto& r : traj.records)
        if (r.t >= 4.0) {
            tau.push_back(r.t);
            err.push_back(r.l1_err_vs_profile);
        }
    EXPECT_NEAR(fit_exponential(tau, err).slope, 0.5, 0.1);
}

TEST(Duhamel, NeedsRecords) {
    auto grid = make_radial_grid(2, 512, 20.0);
    SolverConfig cfg;
    cfg.t_end = 2.0;
    const auto traj = evolve(heat(2, 1.0, 1.0, grid), cfg);
    try {
        duhamel_residual(traj);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientSampling);
    }
}

TEST(Duhamel, HeatSubcriticalAndNegativeControl) {
    auto grid = make_radial_grid(2, 2048, 40.0);
    SolverConfig cfg;
    cfg.t_end = 4.0;
    cfg.records_per_decade = 128;
    cfg.nonlinear = false;
    const auto pure = evolve(heat(2, 4 * pi, 1.0, grid), cfg);
    EXPECT_LT(duhamel_residual(pure), 1e-6);

    cfg.nonlinear = true;
    const auto run = evolve(heat(2, 4 * pi, 1.0, grid), cfg);
    DuhamelOptions opt;
    opt.record_indices = {20, 40, run.records.size() - 1};
    const double good = duhamel_residual(run, opt);
    EXPECT_LT(good, 5e-3);
    opt.drop_nonlinear_history = true;
    EXPECT_GT(duhamel_residual(run, opt), 10 * 5e-3);
}

TEST(Export, CsvAndManifest) {
    auto grid = make_radial_grid(2, 512, 20.0);
    SolverConfig cfg;
    cfg.t_end = 2.0;
    const auto traj = evolve(heat(2, 1.0, 1.0, grid), cfg);
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    EXPECT_EQ(os.str().substr(0, 62), "t,mass,second_moment,sup_norm,l1_err_vs_profile,free_energy\n1,");
    const auto j = trajectory_manifest(traj);
    EXPECT_FALSE(j["blowup_flag"].get<bool>());
    EXPECT_EQ(j["config"]["nonlinearity"], "on");
}
