#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pks/asymptotics.hpp"
#include "pks/config.hpp"
#include "pks/diagnostics.hpp"
#include "pks/evolution.hpp"
#include "pks/profiles.hpp"
#include "pks/snapshot_io.hpp"

namespace pks {

// ------------------------------------------------------------------ checks

enum class CheckRule {
    relative,        // |m - e| <= tol |e|
    absolute,        // |m - e| <= tol
    at_most,         // m <= tol
    at_least,        // m >= tol
    not_below_neg,   // m >= -tol
    at_most_neg,     // m <= -tol
    at_least_unity,  // m >= 1 - tol
};

inline std::string to_string(CheckRule r) {
    switch (r) {
        case CheckRule::relative: return "|measured - expected| <= tol |expected|";
        case CheckRule::absolute: return "|measured - expected| <= tol";
        case CheckRule::at_most: return "measured <= tol";
        case CheckRule::at_least: return "measured >= tol";
        case CheckRule::not_below_neg: return "measured >= -tol";
        case CheckRule::at_most_neg: return "measured <= -tol";
        case CheckRule::at_least_unity: return "measured >= 1 - tol";
    }
    return "?";
}

struct CheckResult {
    std::string name;
    CheckRule rule = CheckRule::at_most;
    bool pass = false;
    double measured = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
};

inline CheckResult judge(std::string name, CheckRule rule, double measured, double expected, double tol) {
    CheckResult c{std::move(name), rule, false, measured, expected, tol};
    switch (rule) {
        case CheckRule::relative: c.pass = std::fabs(measured - expected) <= tol * std::fabs(expected); break;
        case CheckRule::absolute: c.pass = std::fabs(measured - expected) <= tol; break;
        case CheckRule::at_most: c.expected = tol; c.pass = measured <= tol; break;
        case CheckRule::at_least: c.expected = tol; c.pass = measured >= tol; break;
        case CheckRule::not_below_neg: c.expected = -tol; c.pass = measured >= -tol; break;
        case CheckRule::at_most_neg: c.expected = -tol; c.pass = measured <= -tol; break;
        case CheckRule::at_least_unity: c.expected = 1.0 - tol; c.pass = measured >= 1.0 - tol; break;
    }
    if (!std::isfinite(measured)) c.pass = false;
    return c;
}

struct ScenarioResult {
    std::string name;
    std::string recipe;
    std::vector<CheckResult> checks;
    nlohmann::json details = nlohmann::json::object();
    double seconds = 0.0;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    nlohmann::json summary() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& c : checks)
            j[c.name] = {{"status", c.pass ? "pass" : "fail"},
                         {"measured", c.measured},
                         {"expected", c.expected},
                         {"tolerance", c.tolerance},
                         {"rule", to_string(c.rule)}};
        return j;
    }
};

// --------------------------------------------------------------- scenario

enum class InitialKind { gaussian, shifted_gaussian, disk, file };

struct InitialData {
    InitialKind kind = InitialKind::gaussian;
    double mass = 1.0;
    std::vector<double> shift;
    double radius = 1.0;
    std::string file;
};

struct GridSpec {
    bool cartesian = false;
    std::size_t size = 2048;
    double extent = 40.0;  // r_max, or the half width of the square
    GridKind grading = GridKind::graded;
};

struct RecipeInfo {
    std::string name;
    std::string summary;
    std::vector<std::pair<std::string, CheckRule>> checks;
};

inline const std::vector<RecipeInfo>& recipes() {
    using R = CheckRule;
    static const std::vector<RecipeInfo> list{
        {"evolve", "plain run of the initial data; trajectory and diagnostics",
         {{"mass_conservation", R::at_most}, {"virial_slope", R::relative}}},
        {"virial", "2D second-moment growth against 4M(1 - M/8pi) for a list of masses",
         {{"virial_slope", R::relative}, {"virial_slope_critical", R::absolute}, {"mass_conservation", R::at_most}}},
        {"threshold", "subcritical decay of t|u|_inf and supercritical blow-up before the virial time",
         {{"t_sup_slope_upper", R::at_most}, {"t_sup_slope_lower", R::not_below_neg}, {"blowup_time_factor", R::at_most}}},
        {"profile", "self-similar profiles G_M, their stationarity and attraction",
         {{"stationary_residual", R::at_most},
          {"profile_stationarity", R::at_most},
          {"gaussian_attraction_final", R::at_most},
          {"gaussian_attraction_monotone", R::at_most}}},
        {"decay_rate", "sup-norm decay exponent and correction decay in n >= 3",
         {{"sup_exponent", R::absolute}, {"l1_exponent_negative", R::at_most_neg}, {"sup_correction_decreasing", R::at_most_neg}}},
        {"expansion", "first-order expansion of the similarity heat semigroup for shifted data",
         {{"expansion_rate", R::at_least_unity}}},
        {"constants", "log-t constants c_2 and c_1 against their oracles",
         {{"c2_reduced", R::relative}, {"c2_closed_form", R::relative}, {"c1_monte_carlo", R::relative}}},
        {"wstar", "the second-order profile W_* and W(x, t)",
         {{"self_similarity", R::at_most},
          {"pde_residual", R::at_most},
          {"moment_stability", R::at_most},
          {"null_integral", R::at_most},
          {"dual_quadrature_origin", R::at_most}}},
        {"phi", "backward-heat-weighted density monotonicity on a 2D run",
         {{"phi_margin", R::not_below_neg}, {"phi_heat_closed_form", R::at_most}}},
        {"potential_bound", "sup |grad E_n * u| against |u|_1^{1/n} |u|_inf^{1-1/n}",
         {{"unit_disk", R::at_most}, {"ratio_bound", R::at_most}, {"amplitude_invariance", R::at_most}}},
        {"properties", "conservation, semigroup law, null conditions, Duhamel and Taylor checks",
         {{"mass_conservation", R::at_most},
          {"semigroup_law", R::at_most},
          {"null_conditions", R::at_most},
          {"duhamel_residual", R::at_most},
          {"duhamel_negative_control", R::at_least},
          {"taylor_exponent", R::at_least}}},
    };
    return list;
}

inline const RecipeInfo* find_recipe(const std::string& name) {
    for (const auto& r : recipes())
        if (r.name == name) return &r;
    return nullptr;
}

struct Scenario {
    std::string name;
    std::string recipe;
    int dim = 2;
    std::uint64_t seed = 1;
    InitialData initial;
    GridSpec grid;
    SolverConfig solver;
    std::vector<std::pair<std::string, double>> checks;
    Config config;  // the parsed file; recipes read their [recipe] keys from it

    double tolerance(const std::string& check) const {
        for (const auto& [k, v] : checks)
            if (k == check) return v;
        return -1.0;
    }
    bool wants(const std::string& check) const { return tolerance(check) > 0.0; }
};

/// Builds and validates a scenario; every problem is a ConfigError naming the key.
inline Scenario make_scenario(const Config& c, const std::filesystem::path& base_dir = ".") {
    auto fail = [&](const std::string& key, const std::string& why) {
        throw Error(ErrorCode::ConfigError, c.origin() + ": key '" + key + "' " + why);
    };
    Scenario s;
    s.name = c.string("scenario.name");
    for (char ch : s.name)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-') fail("scenario.name", "must be alphanumeric");
    s.recipe = c.string("scenario.recipe", "evolve");
    const RecipeInfo* info = find_recipe(s.recipe);
    if (!info) fail("scenario.recipe", "names an unknown recipe '" + s.recipe + "'");
    s.dim = static_cast<int>(c.integer("scenario.dim", 2));
    if (s.dim < 2 || s.dim > 5) fail("scenario.dim", "must lie in {2, 3, 4, 5}");
    const long seed = c.integer("scenario.seed", 1);
    if (seed < 0) fail("scenario.seed", "must be >= 0");
    s.seed = static_cast<std::uint64_t>(seed);

    const auto kind = c.string("initial.type", "gaussian");
    if (kind == "gaussian") s.initial.kind = InitialKind::gaussian;
    else if (kind == "shifted_gaussian") s.initial.kind = InitialKind::shifted_gaussian;
    else if (kind == "disk") s.initial.kind = InitialKind::disk;
    else if (kind == "file" || kind == "custom-file") s.initial.kind = InitialKind::file;
    else fail("initial.type", "must be gaussian, shifted_gaussian, disk or file");
    s.initial.mass = c.number("initial.mass", 1.0);
    if (!(s.initial.mass >= 0.0)) fail("initial.mass", "must be >= 0");
    s.initial.shift = c.numbers("initial.shift", std::vector<double>(static_cast<std::size_t>(s.dim), 0.0));
    if (s.initial.shift.size() != static_cast<std::size_t>(s.dim)) fail("initial.shift", "must have dim components");
    s.initial.radius = c.number("initial.radius", 1.0);
    if (!(s.initial.radius > 0.0)) fail("initial.radius", "must be > 0");
    if (s.initial.kind == InitialKind::file) {
        const auto f = c.string("initial.file");
        const auto p = std::filesystem::path(f).is_absolute() ? std::filesystem::path(f) : base_dir / f;
        if (!std::filesystem::exists(p)) fail("initial.file", "refers to a missing file '" + p.string() + "'");
        s.initial.file = p.string();
    }

    const auto gk = c.string("grid.kind", "radial");
    if (gk != "radial" && gk != "cartesian") fail("grid.kind", "must be radial or cartesian");
    s.grid.cartesian = gk == "cartesian";
    if (s.grid.cartesian && s.dim != 2) fail("grid.kind", "cartesian grids are two-dimensional");
    s.grid.size = static_cast<std::size_t>(c.integer("grid.size", s.grid.cartesian ? 256 : 2048));
    s.grid.extent = c.number("grid.extent", s.grid.cartesian ? 20.0 : 40.0);
    if (!(s.grid.extent > 0.0)) fail("grid.extent", "must be > 0");
    if (s.grid.cartesian && (s.grid.size < 8 || (s.grid.size & (s.grid.size - 1)) != 0))
        fail("grid.size", "must be a power of two >= 8 on cartesian grids");
    if (!s.grid.cartesian && s.grid.size < 16) fail("grid.size", "must be >= 16");
    const auto grading = c.string("grid.grading", "graded");
    if (grading != "graded" && grading != "uniform") fail("grid.grading", "must be graded or uniform");
    s.grid.grading = grading == "graded" ? GridKind::graded : GridKind::uniform;
    if (!s.grid.cartesian && s.initial.kind == InitialKind::shifted_gaussian)
        fail("initial.type", "shifted data need a cartesian grid");

    auto& v = s.solver;
    v.dt_initial = c.number("solver.dt_initial", v.dt_initial);
    if (!(v.dt_initial > 0.0)) fail("solver.dt_initial", "must be > 0");
    v.safety = c.number("solver.safety", v.safety);
    if (!(v.safety > 0.0 && v.safety < 1.0)) fail("solver.safety", "must lie in (0, 1)");
    v.t_start = c.number("solver.t_start", v.t_start);
    v.t_end = c.number("solver.t_end", v.t_end);
    if (!(v.t_end > v.t_start)) fail("solver.t_end", "must exceed solver.t_start");
    v.dt_max_fraction = c.number("solver.dt_max_fraction", v.dt_max_fraction);
    if (!(v.dt_max_fraction > 0.0)) fail("solver.dt_max_fraction", "must be > 0");
    if (c.has("solver.scheme")) {
        const auto sch = c.string("solver.scheme");
        if (sch == "conservative-upwind") v.scheme = AdvectionScheme::conservative_upwind;
        else if (sch == "pseudo-spectral") v.scheme = AdvectionScheme::pseudo_spectral;
        else fail("solver.scheme", "must be conservative-upwind or pseudo-spectral");
        if ((*v.scheme == AdvectionScheme::pseudo_spectral) != s.grid.cartesian)
            fail("solver.scheme", "does not fit the grid kind");
    }
    v.nonlinear = c.flag("solver.nonlinearity", true);
    v.clamp_tolerance = c.number("solver.clamp_tolerance", v.clamp_tolerance);
    if (!(v.clamp_tolerance >= 0.0)) fail("solver.clamp_tolerance", "must be >= 0");
    v.records_per_decade = static_cast<int>(c.integer("solver.records_per_decade", v.records_per_decade));
    if (v.records_per_decade < 1) fail("solver.records_per_decade", "must be >= 1");
    v.record_interval = c.number("solver.record_interval", v.record_interval);
    if (!(v.record_interval > 0.0)) fail("solver.record_interval", "must be > 0");
    v.blowup_factor = c.number("solver.blowup_factor", v.blowup_factor);
    v.dt_min = c.number("solver.dt_min", v.dt_min);

    for (const auto& key : c.section("checks")) {
        bool known = false;
        for (const auto& [name, rule] : info->checks) known = known || name == key;
        if (!known) fail("checks." + key, "is not a check of recipe '" + s.recipe + "'");
        const double tol = c.number("checks." + key);
        if (!(tol > 0.0)) fail("checks." + key, "must be a tolerance > 0");
        s.checks.emplace_back(key, tol);
    }
    s.config = c;  // after validation, so the copy knows which keys were read
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    return make_scenario(Config::load(path), std::filesystem::path(path).parent_path());
}

// ----------------------------------------------------------------- helpers

namespace detail {

/// Files of one scenario run; nothing is written when the directory is empty.
class Output {
public:
    explicit Output(std::string dir) : dir_(std::move(dir)) {
        if (!dir_.empty()) std::filesystem::create_directories(dir_);
    }
    template <typename Fn>
    void write(const std::string& file, Fn&& fn) const {
        if (dir_.empty()) return;
        std::ofstream os(std::filesystem::path(dir_) / file, std::ios::binary);
        os << std::setprecision(csv_digits);
        fn(os);
    }
    void json(const std::string& file, const nlohmann::json& j) const {
        write(file, [&](std::ostream& os) { os << j.dump(2) << "\n"; });
    }
    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
};

inline std::string mass_label(double m) {
    std::ostringstream os;
    const double q = m / pi;
    if (std::fabs(q - std::round(q)) < 1e-12 && q != 0.0) os << std::llround(q) << "pi";
    else os << std::setprecision(6) << m;
    return os.str();
}

struct Checker {
    const Scenario& scn;
    std::vector<CheckResult>& out;
    void operator()(const std::string& check, const std::string& label, double measured, double expected = 0.0) const {
        const double tol = scn.tolerance(check);
        if (tol <= 0.0) return;
        CheckRule rule = CheckRule::at_most;
        for (const auto& [name, r] : find_recipe(scn.recipe)->checks)
            if (name == check) rule = r;
        out.push_back(judge(label.empty() ? check : check + "@" + label, rule, measured, expected, tol));
    }
};

inline RadialGridPtr radial_grid(const Scenario& s, int dim) {
    return make_radial_grid(dim, s.grid.size, s.grid.extent, s.grid.grading);
}

inline RadialField radial_initial(const Scenario& s, const RadialGridPtr& grid, double mass) {
    const int n = grid->dim();
    const double t0 = s.solver.t_start;
    switch (s.initial.kind) {
        case InitialKind::gaussian:
        case InitialKind::shifted_gaussian:
            return sample_radial(grid, [&](double r) { return mass * heat_kernel(n, r, t0); });
        case InitialKind::disk: {
            const double vol = sphere_area(n) / n * std::pow(s.initial.radius, n);
            auto f = sample_radial(grid, [&](double r) { return r < s.initial.radius ? mass / vol : 0.0; });
            const double m = total_mass(f);
            return m > 0.0 ? rescale(f, mass / m, 1.0) : f;
        }
        case InitialKind::file: return snapshot_to_radial(read_snapshot(s.initial.file), grid);
    }
    return RadialField(grid);
}

inline CartesianField2D cartesian_initial(const Scenario& s, const CartesianGridPtr& grid, double mass) {
    const double t0 = s.solver.t_start;
    const double bx = s.initial.shift.at(0), by = s.initial.shift.at(1);
    switch (s.initial.kind) {
        case InitialKind::gaussian:
            return sample_cartesian(grid, [&](double x, double y) { return mass * heat_kernel(2, std::hypot(x, y), t0); });
        case InitialKind::shifted_gaussian:
            return sample_cartesian(grid, [&](double x, double y) { return mass * heat_kernel(2, std::hypot(x - bx, y - by), t0); });
        case InitialKind::disk: {
            auto f = sample_cartesian(grid, [&](double x, double y) { return std::hypot(x, y) < s.initial.radius ? 1.0 : 0.0; });
            const double m = total_mass(f);
            return m > 0.0 ? rescale(f, mass / m, 1.0) : f;
        }
        case InitialKind::file: return snapshot_to_cartesian(read_snapshot(s.initial.file), grid);
    }
    return CartesianField2D(grid);
}

/// Calls fn with the scenario's initial field for the given mass.
template <typename Fn>
void with_initial(const Scenario& s, double mass, Fn&& fn) {
    if (s.grid.cartesian) fn(cartesian_initial(s, make_cartesian_grid(s.grid.size, s.grid.extent), mass));
    else fn(radial_initial(s, radial_grid(s, s.dim), mass));
}

template <DensityField Field>
double max_mass_drift(const Trajectory<Field>& traj) {
    double worst = 0.0;
    for (std::size_t k = 1; k < traj.records.size(); ++k) {
        const double a = traj.records[k - 1].moments.mass, b = traj.records[k].moments.mass;
        if (a > 0.0) worst = std::max(worst, std::fabs(b - a) / a);
    }
    return worst;
}

template <DensityField Field>
void write_run(const Output& out, const std::string& tag, const Trajectory<Field>& traj) {
    out.write("trajectory" + tag + ".csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
    out.json("manifest" + tag + ".json", trajectory_manifest(traj));
    if (traj.config.keep_fields && !traj.records.empty() && traj.records.front().field.size() > 0)
        out.write("diagnostics" + tag + ".csv",
                  [&](std::ostream& os) { write_diagnostics_csv(os, diagnostics_table(traj), traj.similarity); });
}

// ----------------------------------------------------------------- recipes

inline void recipe_evolve(const Scenario& s, const Output& out, const Checker& check, nlohmann::json& details) {
    with_initial(s, s.initial.mass, [&](auto u0) {
        const auto traj = evolve(u0, s.solver);
        write_run(out, "", traj);
        details["blowup"] = traj.blowup;
        details["steps"] = traj.steps;
        if (traj.blowup) details["blowup_time"] = traj.blowup_time;
        check("mass_conservation", "", max_mass_drift(traj));
        if (s.dim == 2) {
            const double m = traj.records.front().moments.mass;
            const double slope = traj.blowup ? std::numeric_limits<double>::quiet_NaN() : virial_fit(traj).slope;
            check("virial_slope", "", slope, virial_rate_2d(m));
        }
    });
}

inline void recipe_virial(const Scenario& s, const Output& out, const Checker& check, nlohmann::json& details) {
    require(s.dim == 2, ErrorCode::ConfigError, "virial recipe needs dim = 2");
    const auto masses = s.config.numbers("recipe.masses", {2 * pi, 4 * pi, 6 * pi, 8 * pi});
    // optional box per mass; the critical core needs a finer spacing than the subcritical tails allow
    const auto extents = s.config.numbers("recipe.extents", std::vector<double>(masses.size(), s.grid.extent));
    if (extents.size() != masses.size())
        throw Error(ErrorCode::ConfigError, "recipe.extents: needs one entry per mass in recipe.masses");
    for (std::size_t k = 0; k < masses.size(); ++k) {
        const double m = masses[k];
        if (!(extents[k] > 0.0)) throw Error(ErrorCode::ConfigError, "recipe.extents: entries must be > 0");
        Scenario sk = s;
        sk.grid.extent = extents[k];
        with_initial(sk, m, [&](auto u0) {
            SolverConfig cfg = s.solver;
            cfg.keep_fields = false;
            const auto traj = evolve(u0, cfg);
            const auto label = mass_label(m);
            write_run(out, "_M" + label, traj);
            const double expect = virial_rate_2d(m);
            const double slope = traj.blowup ? std::numeric_limits<double>::quiet_NaN() : virial_fit(traj).slope;
            details["slopes"][label] = {{"measured", slope}, {"expected", expect}, {"steps", traj.steps}, {"extent", extents[k]}};
            if (std::fabs(1.0 - m / (8 * pi)) < 1e-9) check("virial_slope_critical", label, slope, expect);
            else check("virial_slope", label, slope, expect);
            check("mass_conservation", label, max_mass_drift(traj));
        });
    }
}

inline void recipe_threshold(const Scenario& s, const Output& out, const Checker& check, nlohmann::json& details) {
    require(s.dim == 2 && !s.grid.cartesian, ErrorCode::ConfigError, "threshold recipe runs on 2D radial grids");
    const auto grid = radial_grid(s, 2);
    const double sub = s.config.number("recipe.subcritical_mass", 4 * pi);
    const double fit_from = s.config.number("recipe.fit_from", 10.0);
    {
        SolverConfig cfg = s.solver;
        cfg.keep_fields = false;
        const auto traj = evolve(radial_initial(s, grid, sub), cfg);
        write_run(out, "_M" + mass_label(sub), traj);
        std::vector<double> lt, v;
        for (const auto& r : traj.records)
            if (r.t >= fit_from) {
                lt.push_back(std::log(r.t));
                v.push_back(r.t * r.sup_norm);
            }
        const double slope = traj.blowup || lt.size() < 2 ? std::numeric_limits<double>::quiet_NaN() : fit_line(lt, v).slope;
        double sup = 0.0;
        for (double x : v) sup = std::max(sup, x);
        details["subcritical"] = {{"mass", sub}, {"t_sup_slope", slope}, {"sup_t_sup", sup}, {"blowup", traj.blowup}};
        check("t_sup_slope_upper", mass_label(sub), slope);
        check("t_sup_slope_lower", mass_label(sub), slope);
    }
    for (double m : s.config.numbers("recipe.supercritical_masses", {10 * pi})) {
        SolverConfig cfg = s.solver;
        cfg.t_end = s.config.number("recipe.blowup_t_end", 20.0);
        cfg.keep_fields = false;
        const auto u0 = radial_initial(s, grid, m);
        const double vanishing = moments(u0).second_moment / std::fabs(virial_rate_2d(m));
        const auto traj = evolve(u0, cfg);
        const auto label = mass_label(m);
        write_run(out, "_M" + label, traj);
        const double factor = traj.blowup ? (traj.blowup_time - cfg.t_start) / vanishing : infinity;
        details["supercritical"][label] = {{"blowup", traj.blowup},
                                           {"blowup_time", traj.blowup ? traj.blowup_time : -1.0},
                                           {"virial_vanishing_time", vanishing},
                                           {"reason", traj.blowup_reason}};
        check("blowup_time_factor", label, factor);
    }
}

inline void recipe_profile(const Scenario& s, const Output& out, const Checker& check, nlohmann::json& details) {
    require(s.dim == 2 && !s.grid.cartesian, ErrorCode::ConfigError, "profile recipe runs on 2D radial grids");
    const auto grid = radial_grid(s, 2);
    ProfileOptions opt;
    opt.tolerance = s.config.number("recipe.fixed_point_tolerance", opt.tolerance);
    SolverConfig cfg = s.solver;
    cfg.t_start = 0.0;
    cfg.t_end = s.config.number("recipe.stationary_tau_end", 5.0);
    for (double m : s.config.numbers("recipe.masses", {0.1, pi, 4 * pi, 7 * pi})) {
        const auto label = mass_label(m);
        const auto p = self_similar_profile_2d(m, grid, opt);
        details["profiles"][label] = profile_json(p);
        out.write("profile_M" + label + ".csv", [&](std::ostream& os) { write_snapshot(os, p.field, 1.0); });
        check("stationary_residual", label, p.residual);
        if (s.wants("profile_stationarity")) {
            const auto traj = evolve_similarity(p.field, cfg, std::function<RadialField(double)>([&](double) { return p.field; }));
            double worst = 0.0;
            for (const auto& r : traj.records) worst = std::max(worst, r.l1_err_vs_profile);
            write_run(out, "_similarity_M" + label, traj);
            check("profile_stationarity", label, worst);
        }
    }
    if (s.wants("gaussian_attraction_final") || s.wants("gaussian_attraction_monotone")) {
        const double m = s.config.number("recipe.attraction_mass", 4 * pi);
        const auto p = self_similar_profile_2d(m, grid, opt);
        SolverConfig a = cfg;
        a.t_end = s.config.number("recipe.attraction_tau_end", 6.0);
        const auto traj = evolve_similarity(gaussian_profile(2, m, grid), a,
                                            std::function<RadialField(double)>([&](double) { return p.field; }));
        const auto label = mass_label(m);
        write_run(out, "_attraction_M" + label, traj);
        double rise = -infinity;
        for (std::size_t k = 1; k < traj.records.size(); ++k) {
            const double a0 = traj.records[k - 1].l1_err_vs_profile, a1 = traj.records[k].l1_err_vs_profile;
            rise = std::max(rise, (a1 - a0) / a0);
        }
        const double final_rel = traj.records.back().l1_err_vs_profile / m;
        details["attraction"] = {{"mass", m}, {"final_relative_l1", final_rel}, {"largest_relative_step", rise}};
        check("gaussian_attraction_final", label, final_rel);
        check("gaussian_attraction_monotone", label, rise);
    }
}

inline void recipe_decay_rate(const Scenario& s, const Output& out, const Checker& check, nlohmann::json& details) {
    require(s.dim >= 3 && !s.grid.cartesian, ErrorCode::ConfigError, "decay_rate recipe runs on radial grids with n >= 3");
    const auto grid = radial_grid(s, s.dim);
    const double m = s.initial.mass;
    const auto traj = evolve(radial_initial(s, grid, m), s.solver);
    write_run(out, "", traj);
    const double t0 = s.config.number("recipe.fit_from", 10.0);
    const double tail = s.config.number("recipe.last_decade_from", s.solver.t_end / 10.0);
    const int n = s.dim;
    std::vector<double> t, sup, l1, tt, corr;
    for (const auto& r : traj.records) {
        if (r.t < t0) continue;
        t.push_back(r.t);
        sup.push_back(r.sup_norm);
        l1.push_back(r.l1_err_vs_profile);
        if (r.t >= tail) {
            double d = 0.0;
            for (std::size_t i = 0; i < r.field.size(); ++i)
                d = std::max(d, std::fabs(r.field[i] - m * heat_kernel(n, grid->node(i), r.t)));
            tt.push_back(r.t);
            corr.push_back(std::pow(r.t, 0.5 * n) * d);
        }
    }
    const auto fs = fit_rate(t, sup);
    const auto fl = fit_rate(t, l1);
    double rise = -infinity;
    for (std::size_t k = 1; k < corr.size(); ++k) rise = std::max(rise, (corr[k] - corr[k - 1]) / corr[k - 1]);
    details["sup_fit"] = {{"slope", fs.slope}, {"r_squared", fs.r_squared}};
    details["l1_fit"] = {{"slope", fl.slope}, {"r_squared", fl.r_squared}};
    details["correction"] = {{"t", tt}, {"t^{n/2} |u - M Gamma_t|_inf", corr}};
    check("sup_exponent", "", fs.slope, -0.5 * n);
    check("l1_exponent_negative", "", fl.slope);
    check("sup_correction_decreasing", "", rise);
}

inline void recipe_expansion(const Scenario& s, const Output& out, const Checker& check, nlohmann::json& details) {
    const double tau_lo = s.config.number("recipe.tau_from", 2.0), tau_hi = s.config.number("recipe.tau_to", 8.0);
    const double step = s.config.number("recipe.tau_step", 0.5);
    std::vector<double> taus, errs;
    with_initial(s, s.initial.mass, [&](auto u0) {
        for (double tau = tau_lo; tau <= tau_hi + 1e-9; tau += step) {
            taus.push_back(tau);
            errs.push_back(l1_distance(similarity_semigroup(u0, tau), first_order_heat_expansion(u0, tau)));
        }
    });
    const auto f = fit_exponential(taus, errs);
    out.write("expansion.csv", [&](std::ostream& os) {
        os << "tau,l1_remainder\n";
        for (std::size_t k = 0; k < taus.size(); ++k) os << taus[k] << "," << errs[k] << "\n";
    });
    details["rate"] = f.slope;
    details["r_squared"] = f.r_squared;
    check("expansion_rate", "", f.slope);
}

inline void recipe_constants(const Scenario& s, const Output& out, const Checker& check, nlohmann::json& details) {
    const double m = s.config.number("recipe.mass", 1.0);
    if (s.wants("c2_reduced") || s.wants("c2_closed_form")) {
        const auto j = constants_json(4, m, std::vector<double>(4, 0.0), nullptr, 0, s.seed);
        out.json("constants_n4.json", j);
        details["n4"] = j;
        const double c2 = j["c2"].get<double>();
        check("c2_reduced", "", c2, j["oracle_values"]["c2_reduced"].get<double>());
        check("c2_closed_form", "", c2, m * m / (256.0 * std::pow(pi, 4)));
    }
    if (s.wants("c1_monte_carlo")) {
        const auto b0 = s.config.numbers("recipe.b0", {1.0, 0.0, 0.0});
        require(b0.size() == 3, ErrorCode::ConfigError, "recipe.b0 needs three components");
        const auto w = w_star(make_radial_grid(3, static_cast<std::size_t>(s.config.integer("recipe.wstar_size", 1024)),
                                               s.config.number("recipe.wstar_extent", 30.0)));
        const auto samples = static_cast<std::size_t>(s.config.number("recipe.mc_samples", 1e7));
        const auto j = constants_json(3, m, b0, &w, samples, s.seed);
        out.json("constants_n3.json", j);
        details["n3"] = j;
        check("c1_monte_carlo", "", j["c1"].get<double>(), j["oracle_values"]["c1_monte_carlo"].get<double>());
    }
}

inline void recipe_wstar(const Scenario& s, const Output& out, const Checker& check, nlohmann::json& details) {
    const auto grid = make_radial_grid(3, s.grid.size, s.grid.extent, s.grid.grading);
    const double s_max = s.config.number("recipe.s_max", 20.0);
    const double tol = s.config.number("recipe.tail_tolerance", 1e-10);
    const auto w = w_star(grid, s_max, tol, SQuadrature::gauss_legendre);
    details["s_max"] = w.s_max;
    details["decay_rate"] = w.decay_rate;
    details["tail_estimate"] = w.tail_estimate;
    out.write("wstar.csv", [&](std::ostream& os) {
        os << "xi,w_star\n";
        for (std::size_t i = 0; i < w.field.size(); ++i) os << grid->node(i) << "," << w.field[i] << "\n";
    });

    check("null_integral", "", std::fabs(integrate(w.field)));

    if (s.wants("self_similarity")) {
        // t^2 W(sqrt(t) xi, t) at t = 4, evaluated on a grid twice as wide
        const auto wide = make_radial_grid(3, s.grid.size / 2, 2.0 * s.grid.extent, s.grid.grading);
        const auto w4 = w_function(wide, 4.0, w);
        double worst = 0.0;
        for (std::size_t i = 0; i < wide->size(); ++i)
            worst = std::max(worst, std::fabs(16.0 * w4[i] - interpolate_radial(*grid, w.field.values(), wide->node(i) / 2.0)));
        check("self_similarity", "", worst);
    }
    if (s.wants("pde_residual")) {
        // dW/dt - Delta W against div(Gamma grad E_3 * Gamma) written with the enclosed Gaussian mass
        auto source = [](double r) {
            const double g = gaussian_density(3, r);
            return r > 0 ? g * (gaussian_mass_within(3, r) / (8 * pi * r) - g) : -g * g;
        };
        const double h = 1e-3;
        const auto wp = w_function(grid, 1 + h, w), wm = w_function(grid, 1 - h, w);
        std::vector<double> d1, d2;
        radial_derivatives(*grid, w.field.values(), d1, d2);
        double res = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < grid->size(); ++i) {
            const double r = grid->node(i);
            if (r > 0.5 * s.grid.extent) break;
            const double lap = i == 0 ? 3 * d2[0] : d2[i] + 2 * d1[i] / r;
            res += grid->volumes()[i] * std::fabs((wp[i] - wm[i]) / (2 * h) - lap - source(r));
            norm += grid->volumes()[i] * std::fabs(source(r));
        }
        details["pde_residual_relative"] = res / norm;
        check("pde_residual", "", res);
    }
    if (s.wants("moment_stability")) {
        const auto fine = w_star(make_radial_grid(3, 2 * s.grid.size, s.grid.extent, s.grid.grading), 2.0 * w.s_max, tol);
        double worst = 0.0;
        for (int k : {0, 2, 4}) {
            const double a = absolute_moment(w.field, k), b = absolute_moment(fine.field, k);
            details["moments"][std::to_string(k)] = {a, b};
            worst = std::max(worst, std::fabs(a - b) / std::fabs(b));
        }
        check("moment_stability", "", worst);
    }
    if (s.wants("dual_quadrature_origin")) {
        const auto trap = w_star(grid, s_max, tol, SQuadrature::trapezoid);
        details["origin"] = {{"gauss", w.field[0]}, {"trapezoid", trap.field[0]}};
        check("dual_quadrature_origin", "", std::fabs(trap.field[0] - w.field[0]) / std::fabs(w.field[0]));
    }
}

inline void recipe_phi(const Scenario& s, const Output& out, const Checker& check, nlohmann::json& details) {
    require(s.dim == 2 && !s.grid.cartesian, ErrorCode::ConfigError, "phi recipe runs on 2D radial grids");
    const auto grid = radial_grid(s, 2);
    const double m = s.initial.mass;
    const double s1 = s.config.number("recipe.s1", 2.5);
    const double lo = s.config.number("recipe.rho_from", 0.1), hi = s.config.number("recipe.rho_to", 1.0);
    const long count = s.config.integer("recipe.rho_count", 19);
    require(count >= 3 && hi > lo && s1 - hi * hi >= s.solver.t_start, ErrorCode::ConfigError,
            "recipe.rho_* must give at least 3 radii with s1 - rho^2 inside the run");
    std::vector<double> rho;
    for (long i = 0; i < count; ++i) rho.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
    SolverConfig cfg = s.solver;
    cfg.t_end = s1;
    const auto u0 = radial_initial(s, grid, m);

    const auto traj = evolve(u0, cfg);
    write_run(out, "", traj);
    // z1 at the density peak of the run at s1
    const auto& last = traj.records.back().field;
    std::size_t peak = 0;
    for (std::size_t i = 0; i < last.size(); ++i)
        if (last[i] > last[peak]) peak = i;
    const PhiPoint z{{grid->node(peak)}, s1};
    const auto scan = phi_monotonicity_check(traj, z, rho);
    out.write("phi_scan.csv", [&](std::ostream& os) { write_phi_csv(os, scan); });
    details["peak_radius"] = grid->node(peak);
    details["min_margin"] = scan.min_margin;
    details["min_relative_margin"] = scan.min_relative_margin;
    check("phi_margin", "", scan.min_relative_margin);

    if (s.wants("phi_heat_closed_form")) {
        SolverConfig heat = cfg;
        heat.nonlinear = false;
        const auto control = evolve(u0, heat);
        const PhiPoint zc{{}, s1};
        const auto hs = phi_monotonicity_check(control, zc, rho);
        out.write("phi_scan_heat.csv", [&](std::ostream& os) { write_phi_csv(os, hs); });
        double worst = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) {
            const double exact = m * rho[i] * rho[i] / (4.0 * pi * s1);
            worst = std::max(worst, std::fabs(hs.phi[i] - exact) / exact);
        }
        check("phi_heat_closed_form", "", worst);
    }
}

inline void recipe_potential_bound(const Scenario& s, const Output& out, const Checker& check, nlohmann::json& details) {
    if (s.wants("unit_disk")) {
        const auto grid = make_radial_grid(2, 40001, 4.0, GridKind::uniform);
        const auto disk = sample_radial(grid, [](double r) { return r < 1.0 ? 1.0 : (r == 1.0 ? 0.5 : 0.0); });
        const auto b = sup_gradient_bound_check(disk);
        details["unit_disk"] = {{"lhs", b.lhs}, {"rhs", b.rhs_core}};
        check("unit_disk", "lhs", std::fabs(b.lhs - 0.5));
        check("unit_disk", "rhs", std::fabs(b.rhs_core - std::sqrt(pi)));
    }
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const long fields = s.config.integer("recipe.random_fields", 50);
    double worst_ratio = 0.0, worst_scale = 0.0;
    std::vector<std::vector<double>> rows;
    for (long k = 0; k < fields; ++k) {
        const int n = 2 + static_cast<int>(k % 3);
        const auto grid = make_radial_grid(n, 2048, 30.0);
        // sum of three radial bumps with random centres, widths and weights
        std::array<double, 9> p{};
        for (double& x : p) x = U(rng);
        const auto u = sample_radial(grid, [&](double r) {
            double v = 0.0;
            for (int j = 0; j < 3; ++j) {
                const double c = 4.0 * p[3 * j], w = 0.3 + 1.5 * p[3 * j + 1], a = 0.1 + 3.0 * p[3 * j + 2];
                v += a * std::exp(-(r - c) * (r - c) / (w * w));
            }
            return v;
        });
        const double lambda = std::exp(6.0 * (U(rng) - 0.5));
        const auto b = sup_gradient_bound_check(u);
        const auto bl = sup_gradient_bound_check(rescale(u, lambda, 1.0));
        worst_ratio = std::max(worst_ratio, b.ratio);
        worst_scale = std::max(worst_scale, std::fabs(bl.ratio - b.ratio) / b.ratio);
        rows.push_back({static_cast<double>(n), b.lhs, b.rhs_core, b.ratio, lambda, bl.ratio});
    }
    out.write("potential_bound.csv", [&](std::ostream& os) {
        os << "n,lhs,rhs,ratio,lambda,ratio_scaled\n";
        for (const auto& r : rows) os << r[0] << "," << r[1] << "," << r[2] << "," << r[3] << "," << r[4] << "," << r[5] << "\n";
    });
    details["max_ratio"] = worst_ratio;
    check("ratio_bound", "", worst_ratio);
    check("amplitude_invariance", "", worst_scale);
}

inline void recipe_properties(const Scenario& s, [[maybe_unused]] const Output& out, const Checker& check, nlohmann::json& details) {
    const double m = s.initial.mass;
    if (s.wants("mass_conservation")) {
        SolverConfig cfg = s.solver;
        cfg.keep_fields = false;
        cfg.t_end = s.config.number("recipe.conservation_t_end", 10.0);
        const auto tr = evolve(radial_initial(s, make_radial_grid(2, 2048, 60.0), m), cfg);
        auto cg = make_cartesian_grid(128, 16.0);
        SolverConfig cc = cfg;
        cc.t_end = 2.0;
        const auto tc = evolve(cartesian_initial(s, cg, m), cc);
        details["mass_drift"] = {{"radial", max_mass_drift(tr)}, {"cartesian", max_mass_drift(tc)}};
        check("mass_conservation", "radial", max_mass_drift(tr));
        check("mass_conservation", "cartesian", max_mass_drift(tc));
    }
    if (s.wants("semigroup_law")) {
        double worst = 0.0;
        for (int n : {2, 3, 4, 5}) {
            auto grid = make_radial_grid(n, 2048, 30.0);
            const auto f = sample_radial(grid, [](double r) { return r < 2.0 ? std::pow(1 - r * r / 4, 3) : 0.0; });
            worst = std::max(worst, l1_distance(similarity_semigroup(similarity_semigroup(f, 0.4), 0.9), similarity_semigroup(f, 1.3)));
        }
        auto cg = make_cartesian_grid(128, 16.0);
        const auto f = sample_cartesian(cg, [](double x, double y) { return std::exp(-(x - 1) * (x - 1) - 2 * y * y); });
        worst = std::max(worst, l1_distance(similarity_semigroup(similarity_semigroup(f, 0.4), 0.9), similarity_semigroup(f, 1.3)));
        check("semigroup_law", "", worst);
    }
    if (s.wants("null_conditions")) {
        double worst = 0.0;
        for (int n = 2; n <= 5; ++n) {
            const auto src = detail::gaussian_self_divergence(make_radial_grid(n, 4096, 40.0), false);
            worst = std::max(worst, std::fabs(integrate(src)));
        }
        auto cg = make_cartesian_grid(256, 20.0);
        auto blob = [&](double a, double x0, double y0, double w) {
            return sample_cartesian(cg, [=](double x, double y) { return a * std::exp(-((x - x0) * (x - x0) + (y - y0) * (y - y0)) / (w * w)); });
        };
        const auto u1 = blob(3.0, -1.5, 0.7, 0.6), u2 = blob(1.0, 2.0, -1.0, 0.9);
        const auto g1 = cartesian_gradient_2d(u1), g2 = cartesian_gradient_2d(u2);
        double self_x = 0, self_y = 0, pair_x = 0, pair_y = 0, scale = 0;
        for (std::size_t i = 0; i < u1.size(); ++i) {
            self_x += u1[i] * g1.gx[i];
            self_y += u1[i] * g1.gy[i];
            pair_x += u1[i] * g2.gx[i] + u2[i] * g1.gx[i];
            pair_y += u1[i] * g2.gy[i] + u2[i] * g1.gy[i];
            scale = std::max({scale, g1.magnitude(i), g2.magnitude(i)});
        }
        // normalised by total mass times the largest field strength
        const double da = cg->cell_area();
        const double norm = (total_mass(u1) + total_mass(u2)) * scale;
        for (double v : {self_x, self_y, pair_x, pair_y}) worst = std::max(worst, std::fabs(v * da) / norm);
        check("null_conditions", "", worst);
    }
    if (s.wants("duhamel_residual") || s.wants("duhamel_negative_control")) {
        SolverConfig cfg = s.solver;
        cfg.t_end = s.config.number("recipe.duhamel_t_end", 4.0);
        cfg.records_per_decade = static_cast<int>(s.config.integer("recipe.duhamel_records_per_decade", 128));
        const auto traj = evolve(radial_initial(s, make_radial_grid(2, 2048, 40.0), m), cfg);
        DuhamelOptions opt;
        opt.record_indices = {traj.records.size() / 3, 2 * traj.records.size() / 3, traj.records.size() - 1};
        const double good = duhamel_residual(traj, opt);
        opt.drop_nonlinear_history = true;
        const double bad = duhamel_residual(traj, opt);
        details["duhamel"] = {{"residual", good}, {"negative_control", bad}, {"records", traj.records.size()}};
        check("duhamel_residual", "", good);
        check("duhamel_negative_control", "", bad);
    }
    if (s.wants("taylor_exponent")) {
        std::mt19937_64 rng(s.seed);
        double worst = infinity;
        for (int n = 2; n <= 5; ++n) {
            const auto fit = fit_taylor_remainder(n, 20, 2.0, 10.0, rng);
            details["taylor"][std::to_string(n)] = fit.ensemble_exponent;
            worst = std::min(worst, fit.ensemble_exponent);
        }
        check("taylor_exponent", "", worst);
    }
}

}  // namespace detail

/// Runs one scenario. Files go to out_dir when it is non-empty.
inline ScenarioResult run_scenario(const Scenario& s, const std::string& out_dir = "") {
    const auto start = std::chrono::steady_clock::now();
    ScenarioResult res;
    res.name = s.name;
    res.recipe = s.recipe;
    const detail::Output out(out_dir);
    const detail::Checker check{s, res.checks};
    auto& d = res.details;
    if (s.recipe == "evolve") detail::recipe_evolve(s, out, check, d);
    else if (s.recipe == "virial") detail::recipe_virial(s, out, check, d);
    else if (s.recipe == "threshold") detail::recipe_threshold(s, out, check, d);
    else if (s.recipe == "profile") detail::recipe_profile(s, out, check, d);
    else if (s.recipe == "decay_rate") detail::recipe_decay_rate(s, out, check, d);
    else if (s.recipe == "expansion") detail::recipe_expansion(s, out, check, d);
    else if (s.recipe == "constants") detail::recipe_constants(s, out, check, d);
    else if (s.recipe == "wstar") detail::recipe_wstar(s, out, check, d);
    else if (s.recipe == "phi") detail::recipe_phi(s, out, check, d);
    else if (s.recipe == "potential_bound") detail::recipe_potential_bound(s, out, check, d);
    else if (s.recipe == "properties") detail::recipe_properties(s, out, check, d);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::json summary = res.summary();
    out.json("summary.json", summary);
    out.json("details.json", {{"scenario", s.name}, {"recipe", s.recipe}, {"seed", s.seed}, {"details", d}});
    return res;
}

}  // namespace pks
