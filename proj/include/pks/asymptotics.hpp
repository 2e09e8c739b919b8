#pragma once

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_randist.h>
#include <gsl/gsl_sf_gamma.h>

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pks/fit.hpp"
#include "pks/interpolation.hpp"
#include "pks/potential.hpp"
#include "pks/semigroup.hpp"

namespace pks {

enum class SQuadrature { gauss_legendre, trapezoid };

/// W_*(xi) = int_0^inf e^{s/2} S_3(s)[div(G_3 grad V_3)] ds on a radial 3D grid.
struct WStarField {
    RadialField field;
    SQuadrature rule = SQuadrature::gauss_legendre;
    std::vector<double> s_nodes, s_weights;
    double s_max = 0.0;
    double tail_estimate = 0.0;  // bound on the L1 mass of the dropped tail
    double decay_rate = 0.0;     // fitted e^{-rate s} decay of the integrand's L1 norm
};

namespace detail {

/// Gauss-Legendre nodes and weights on [a, b].
inline void gauss_panel(double a, double b, int order, std::vector<double>& x, std::vector<double>& w) {
    gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
        double xi = 0.0, wi = 0.0;
        gsl_integration_glfixed_point(a, b, static_cast<std::size_t>(i), &xi, &wi, t);
        x.push_back(xi);
        w.push_back(wi);
    }
    gsl_integration_glfixed_table_free(t);
}

/// div(G grad V) - the source of W_* - with V = E_n * G from the potential module
/// and derivatives taken on the grid. The discrete mass is projected out.
inline RadialField gaussian_self_divergence(const RadialGridPtr& grid, bool project = true) {
    const int n = grid->dim();
    const auto g = sample_radial(grid, [n](double r) { return gaussian_density(n, r); });
    const auto V = radial_potential(g);
    std::vector<double> g1, g2, v1, v2;
    radial_derivatives(*grid, g.values(), g1, g2);
    radial_derivatives(*grid, V, v1, v2);
    std::vector<double> div(grid->size());
    for (std::size_t i = 0; i < div.size(); ++i) {
        const double r = grid->node(i);
        const double lap = i == 0 ? n * v2[0] : v2[i] + (n - 1) * v1[i] / r;
        div[i] = g1[i] * v1[i] + g[i] * lap;
    }
    RadialField f(grid, std::move(div));
    if (project) {
        const double share = integrate(f) / integrate(g);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] -= share * g[i];
    }
    return f;
}

/// Panel breakpoints: geometric towards s = 0, uniform width 4 beyond s = 4.
inline std::vector<double> s_breakpoints(double s_max) {
    std::vector<double> b{0.0};
    for (int k = -10; k <= 2; ++k) b.push_back(std::ldexp(1.0, k));
    for (double s = 8.0; s < s_max - 1e-9; s += 4.0) b.push_back(s);
    b.push_back(s_max);
    return b;
}

}  // namespace detail

/// Quadrature in s of e^{s/2} S_3(s) div(G_3 grad V_3). s_max is extended in
/// steps of 4 until the integrand's L1 norm at s_max falls below tol.
inline WStarField w_star(const RadialGridPtr& grid, double s_max = 20.0, double tol = 1e-10,
                         SQuadrature rule = SQuadrature::gauss_legendre) {
    require(grid->dim() == 3, ErrorCode::InvalidParameter, "W_* lives on a 3D radial grid");
    require(s_max >= 20.0, ErrorCode::InvalidParameter, "s_max must be >= 20");
    require(tol > 0.0, ErrorCode::InvalidParameter, "tol must be > 0");
    const auto source = detail::gaussian_self_divergence(grid);
    const auto gauss = sample_radial(grid, [](double r) { return gaussian_density(3, r); });
    const double gauss_mass = integrate(gauss);

    // S_3(s) conserves the (zero) mass of the source; rounding leaves a multiple of
    // the fixed point G_3 that e^{s/2} would amplify, so it is removed.
    auto project = [&](RadialField v) {
        const double share = integrate(v) / gauss_mass;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= share * gauss[i];
        return v;
    };
    // Far out S_3(s) F is many orders below F, so it is reached through the
    // semigroup law from checkpoints S_3(12k) F to keep rounding relative to
    // the current size.
    constexpr double stage = 12.0;
    std::vector<RadialField> checkpoints{source};
    auto integrand = [&](double s) {
        if (s == 0.0) return source.values();
        const auto k = static_cast<std::size_t>(std::floor(s / stage));
        while (checkpoints.size() <= k)
            checkpoints.push_back(project(similarity_semigroup(checkpoints.back(), stage)));
        const double rest = s - stage * static_cast<double>(k);
        const auto v = rest > 0.0 ? project(similarity_semigroup(checkpoints[k], rest)) : checkpoints[k];
        const double e = std::exp(0.5 * s);
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = e * v[i];
        return out;
    };
    auto l1 = [&](const std::vector<double>& v) {
        double a = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) a += grid->volumes()[i] * std::fabs(v[i]);
        return a;
    };

    // extend until the tail is negligible
    std::vector<double> probe_s, probe_l1;
    for (double s = 2.0; s <= s_max + 1e-9; s += 2.0) {
        probe_s.push_back(s);
        probe_l1.push_back(l1(integrand(s)));
    }
    while (probe_l1.back() > tol) {
        require(s_max < 200.0, ErrorCode::QuadratureDiverging, "integrand tail does not fall below tol by s = 200");
        s_max += 4.0;
        for (double s = probe_s.back() + 2.0; s <= s_max + 1e-9; s += 2.0) {
            probe_s.push_back(s);
            probe_l1.push_back(l1(integrand(s)));
        }
    }
    std::vector<double> ts, tl;
    for (std::size_t k = 0; k < probe_s.size(); ++k)
        if (probe_s[k] >= 0.5 * s_max) {
            ts.push_back(probe_s[k]);
            tl.push_back(probe_l1[k]);
        }
    const double rate = ts.size() >= 2 ? -fit_line(ts, [&] {
        std::vector<double> y;
        for (double v : tl) y.push_back(std::log(v));
        return y;
    }()).slope
                                       : 0.0;
    require(rate >= 0.45, ErrorCode::QuadratureDiverging,
            "integrand decays like e^{-" + std::to_string(rate) + " s}, slower than e^{-s/2}");

    WStarField out;
    out.rule = rule;
    out.s_max = s_max;
    out.decay_rate = rate;
    out.tail_estimate = 2.0 * probe_l1.back();
    const auto breaks = detail::s_breakpoints(s_max);
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double a = breaks[p], b = breaks[p + 1];
        if (rule == SQuadrature::gauss_legendre) {
            detail::gauss_panel(a, b, 8, out.s_nodes, out.s_weights);
        } else {
            constexpr int m = 48;
            const double h = (b - a) / m;
            for (int k = 0; k <= m; ++k) {
                const double wk = (k == 0 || k == m) ? 0.5 * h : h;
                if (k == 0 && !out.s_nodes.empty()) {
                    out.s_weights.back() += wk;
                    continue;
                }
                out.s_nodes.push_back(a + k * h);
                out.s_weights.push_back(wk);
            }
        }
    }
    std::vector<double> acc(grid->size(), 0.0);
    for (std::size_t k = 0; k < out.s_nodes.size(); ++k) {
        const auto v = integrand(out.s_nodes[k]);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += out.s_weights[k] * v[i];
    }
    out.field = RadialField(grid, std::move(acc));
    return out;
}

/// W(x, t) = t^{-2} W_*(x / sqrt t).
inline RadialField w_function(const RadialGridPtr& x_grid, double t, const WStarField& w) {
    require(t > 0.0, ErrorCode::InvalidParameter, "w_function needs t > 0");
    const double st = std::sqrt(t);
    return sample_radial(x_grid, [&](double r) {
        return interpolate_radial(w.field.grid(), w.field.values(), r / st) / (t * t);
    });
}

/// int |xi|^k |W_*| d xi.
inline double absolute_moment(const RadialField& f, int k) {
    double a = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        a += f.grid().volumes()[i] * std::fabs(f[i]) * std::pow(f.grid().node(i), k);
    return a;
}

// ---------------------------------------------------------------- constants

/// int_{R^n} |z|^2 f(z) dz for radial f.
inline double second_moment_integral(const RadialField& f) {
    double a = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) a += f.grid().volumes()[i] * f[i] * f.grid().node(i) * f.grid().node(i);
    return a;
}

/// c_2(M) = (M / 4 pi)^2 int_{R^4} |z|^2 div(G_4 grad V_4) dz on a 4D radial grid.
inline double constant_c2(double mass, const RadialGridPtr& grid = make_radial_grid(4, 4096, 30.0)) {
    require(mass >= 0.0, ErrorCode::InvalidParameter, "mass must be >= 0");
    require(grid->dim() == 4, ErrorCode::InvalidParameter, "c_2 needs a 4D grid");
    const double k = mass / (4.0 * pi);
    return k * k * second_moment_integral(detail::gaussian_self_divergence(grid, false));
}

/// Reduced form (M / 4 pi)^2 2 int_0^inf G_4(r) m_4(r) r dr with closed-form m_4.
inline double constant_c2_reduced(double mass) {
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(200);
    gsl_function fn;
    fn.function = [](double r, void*) { return 2.0 * gaussian_density(4, r) * gaussian_mass_within(4, r) * r; };
    fn.params = nullptr;
    double value = 0.0, err = 0.0;
    gsl_integration_qagiu(&fn, 0.0, 1e-15, 1e-12, 200, ws, &value, &err);
    gsl_integration_workspace_free(ws);
    const double k = mass / (4.0 * pi);
    return k * k * value;
}

namespace detail {

/// Radial and dipole parts of int |z|^2 div(G grad V^(1) + G^(1) grad V) / M^2 - the
/// radial part with G^(1) = W_*, the dipole part per unit |B0|.
struct C1Parts {
    double radial = 0.0;
    double dipole = 0.0;
};

inline C1Parts c1_quadrature(const WStarField& w) {
    const auto& grid = w.field.grid_ptr();
    const auto g = sample_radial(grid, [](double r) { return gaussian_density(3, r); });
    const auto V = radial_potential(g);
    const auto VW = radial_potential(w.field);
    std::vector<double> g1, g2, v1, v2, w1, w2, q1, q2;
    radial_derivatives(*grid, g.values(), g1, g2);
    radial_derivatives(*grid, V, v1, v2);
    radial_derivatives(*grid, w.field.values(), w1, w2);
    radial_derivatives(*grid, VW, q1, q2);
    std::vector<double> div(grid->size()), dip(grid->size());
    for (std::size_t i = 0; i < div.size(); ++i) {
        const double r = grid->node(i);
        const double lv = i == 0 ? 3 * v2[0] : v2[i] + 2 * v1[i] / r;
        const double lq = i == 0 ? 3 * q2[0] : q2[i] + 2 * q1[i] / r;
        div[i] = g1[i] * q1[i] + g[i] * lq + w1[i] * v1[i] + w.field[i] * lv;
        // dipole: div(G grad(e.grad V) + (e.grad G) grad V) = mu (G' V'' + V' G'' - 2 G G')
        dip[i] = g1[i] * v2[i] + v1[i] * g2[i] - 2.0 * g[i] * g1[i];
    }
    C1Parts p;
    p.radial = second_moment_integral(RadialField(grid, std::move(div)));
    // angular integral of mu against Gauss-Legendre nodes in mu = cos(theta)
    std::vector<double> mu, wmu;
    gauss_panel(-1.0, 1.0, 16, mu, wmu);
    double ang = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) ang += wmu[k] * mu[k];
    ang *= 0.5;  // the sphere average of mu
    p.dipole = ang * second_moment_integral(RadialField(grid, std::move(dip)));
    return p;
}

}  // namespace detail

/// c_1(M, B0) = (4 pi)^{-3/2} M int |z|^2 div(G_3 grad V^(1) + G^(1) grad V_3) dz,
/// G^(1) = B0.grad G_3 + M^2 W_*.
inline double constant_c1(double mass, const std::array<double, 3>& b0, const WStarField* w) {
    require(w != nullptr && w->field.size() > 0, ErrorCode::DependencyMissing, "c_1 needs W_*; call w_star first");
    const auto p = detail::c1_quadrature(*w);
    const double b = std::hypot(b0[0], b0[1], b0[2]);
    return std::pow(4.0 * pi, -1.5) * mass * (mass * mass * p.radial + b * p.dipole);
}

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Monte Carlo for c_1: radii stratified under the density ~ r^4 e^{-r^2/4},
/// directions uniform and antithetic, integrand from closed-form derivatives.
template <typename Rng>
MonteCarloEstimate constant_c1_monte_carlo(double mass, const std::array<double, 3>& b0, const WStarField& w,
                                           std::size_t samples, Rng& rng) {
    require(samples >= 2, ErrorCode::InvalidParameter, "need at least 2 samples");
    const auto& grid = w.field.grid();
    std::vector<double> w1, w2;
    radial_derivatives(grid, w.field.values(), w1, w2);
    const auto mw = grid.cumulative(w.field.values());
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N(0.0, 1.0);
    const double inv4pi = 1.0 / (4.0 * pi);

    auto integrand = [&](double r, double bmu) {
        const double G = gaussian_density(3, r);
        const double G1 = -0.5 * r * G, G2 = (0.25 * r * r - 0.5) * G;
        const double m = gaussian_mass_within(3, r);
        const double V1 = -m * inv4pi / (r * r);
        const double V2 = m / (2.0 * pi * r * r * r) - G;
        const double W = interpolate_radial(grid, w.field.values(), r);
        const double W1 = interpolate_radial(grid, w1, r);
        const double mW = interpolate_radial(grid, mw, r);
        const double VW1 = -mW * inv4pi / (r * r);
        const double radial = G1 * VW1 - G * W + W1 * V1 - W * G;
        const double dipole = bmu * (G1 * V2 + V1 * G2 - 2.0 * G * G1);
        return r * r * (mass * mass * radial + dipole);
    };

    const std::size_t strata = samples / 2;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t k = 0; k < strata; ++k) {
        const double u = (static_cast<double>(k) + U(rng)) / static_cast<double>(strata);
        const double x = gsl_cdf_chisq_Pinv(u, 5.0);
        const double r = std::sqrt(2.0 * x);
        const double q = gsl_ran_chisq_pdf(x, 5.0) * r;  // density of r
        const double p = q / (4.0 * pi * r * r);          // density in R^3
        double d[3] = {N(rng), N(rng), N(rng)};
        const double dn = std::hypot(d[0], d[1], d[2]);
        const double bmu = (b0[0] * d[0] + b0[1] * d[1] + b0[2] * d[2]) / dn;
        const double f = 0.5 * (integrand(r, bmu) + integrand(r, -bmu)) / p;
        sum += f;
        sum2 += f * f;
    }
    // strata are equal-probability; the spread across strata overstates the error
    const double mean = sum / static_cast<double>(strata);
    const double var = std::max(0.0, sum2 / static_cast<double>(strata) - mean * mean);
    MonteCarloEstimate e;
    const double pref = std::pow(4.0 * pi, -1.5) * mass;
    e.value = pref * mean;
    e.std_error = pref * std::sqrt(var / static_cast<double>(strata));
    e.samples = 2 * strata;
    return e;
}

// ---------------------------------------------------------------- expansion

struct ExpansionTerm {
    std::string name;
    std::function<double(const std::vector<double>&)> profile;  // in xi = x / sqrt t
    double t_exponent = 0.0;
    bool log_factor = false;
    double coefficient = 0.0;

    double operator()(const std::vector<double>& x, double t) const {
        std::vector<double> xi(x);
        const double st = std::sqrt(t);
        for (double& v : xi) v /= st;
        return coefficient * std::pow(t, t_exponent) * (log_factor ? std::log(t) : 1.0) * profile(xi);
    }
};

namespace detail {
inline double norm2(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}
}  // namespace detail

/// Large-time expansion terms for n in {3, 4, 5}; order 0 is M Gamma_t alone.
/// Terms with zero coefficient are dropped; the rest are ordered by decreasing
/// sup magnitude at t = 1 (so log t terms come last).
inline std::vector<ExpansionTerm> expansion(int n, double mass, const std::vector<double>& b0, int order,
                                            const WStarField* w = nullptr) {
    if (n == 2) throw Error(ErrorCode::UseProfileModule, "the planar asymptote is G_M; use the profiles module");
    require(n >= 3 && n <= 5, ErrorCode::InvalidParameter, "expansion covers n in {3, 4, 5}");
    require(order == 0 || order == 1, ErrorCode::InvalidParameter, "order must be 0 or 1");
    require(b0.size() == static_cast<std::size_t>(n), ErrorCode::InvalidParameter, "B0 must have n components");
    std::vector<std::pair<double, ExpansionTerm>> terms;
    auto add = [&](ExpansionTerm t, double sup) {
        if (t.coefficient != 0.0) terms.emplace_back(std::fabs(t.coefficient) * (t.log_factor ? 0.0 : sup), std::move(t));
    };
    add({"M Gamma_t", [n](const std::vector<double>& xi) { return gaussian_density(n, std::sqrt(detail::norm2(xi))); },
         -0.5 * n, false, mass},
        gaussian_density(n, 0.0));
    if (order == 1) {
        const double bn = std::sqrt(detail::norm2(b0));
        add({"-B0.grad Gamma_t",
             [n, b0](const std::vector<double>& xi) {
                 double dot = 0.0;
                 for (std::size_t k = 0; k < xi.size(); ++k) dot += b0[k] * xi[k];
                 return 0.5 * dot * gaussian_density(n, std::sqrt(detail::norm2(xi)));
             },
             -0.5 * (n + 1), false, bn > 0.0 ? 1.0 : 0.0},
            bn * gaussian_density(n, 0.0) * std::sqrt(0.5) * std::exp(-0.5));
        if (n == 3 && mass != 0.0) {
            require(w != nullptr, ErrorCode::DependencyMissing, "n = 3 needs W_*");
            const auto field = std::make_shared<RadialField>(w->field);
            add({"-M^2 W",
                 [field](const std::vector<double>& xi) {
                     return interpolate_radial(field->grid(), field->values(), std::sqrt(detail::norm2(xi)));
                 },
                 -2.0, false, -mass * mass},
                sup_norm(field->values()));
            const std::array<double, 3> b{b0[0], b0[1], b0[2]};
            add({"-c1 t^{-5/2} log t",
                 [](const std::vector<double>& xi) {
                     const double q = detail::norm2(xi);
                     return (0.5 - q / 12.0) * std::exp(-q / 4.0);
                 },
                 -2.5, true, -constant_c1(mass, b, w)},
                0.5);
        }
        if (n == 4)
            add({"+c2 t^{-3} log t",
                 [](const std::vector<double>& xi) {
                     const double q = detail::norm2(xi);
                     return (0.5 - q / 16.0) * std::exp(-q / 4.0);
                 },
                 -3.0, true, constant_c2(mass)},
                0.5);
    }
    std::stable_sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<ExpansionTerm> out;
    for (auto& t : terms) out.push_back(std::move(t.second));
    return out;
}

inline double evaluate_expansion(const std::vector<ExpansionTerm>& terms, const std::vector<double>& x, double t) {
    double s = 0.0;
    for (const auto& term : terms) s += term(x, t);
    return s;
}

// ---------------------------------------------------------------- report

inline nlohmann::json constants_json(int n, double mass, const std::vector<double>& b0, const WStarField* w,
                                     std::size_t mc_samples, std::uint64_t seed) {
    if (n == 2) throw Error(ErrorCode::UseProfileModule, "no log-t constants in the plane; use the profiles module");
    require(n >= 3 && n <= 5, ErrorCode::InvalidParameter, "constants exist for n in {3, 4, 5}");
    nlohmann::json j;
    j["n"] = n;
    j["M"] = mass;
    j["B0"] = b0;
    j["c1"] = nullptr;
    j["c2"] = nullptr;
    j["oracle_values"] = nlohmann::json::object();
    j["rel_disagreement"] = nlohmann::json::object();
    auto rel = [](double a, double b) { return a == b ? 0.0 : std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b)); };
    if (n == 3) {
        require(w != nullptr, ErrorCode::DependencyMissing, "c_1 needs W_*");
        const std::array<double, 3> b{b0.at(0), b0.at(1), b0.at(2)};
        const double c1 = constant_c1(mass, b, w);
        std::mt19937_64 rng(seed);
        const auto mc = constant_c1_monte_carlo(mass, b, *w, mc_samples, rng);
        j["c1"] = c1;
        j["oracle_values"]["c1_monte_carlo"] = mc.value;
        j["oracle_values"]["c1_monte_carlo_std_error"] = mc.std_error;
        j["oracle_values"]["c1_monte_carlo_samples"] = mc.samples;
        j["rel_disagreement"]["c1"] = rel(c1, mc.value);
    } else if (n == 4) {
        const double c2 = constant_c2(mass);
        const double oracle = constant_c2_reduced(mass);
        j["c2"] = c2;
        j["oracle_values"]["c2_reduced"] = oracle;
        j["rel_disagreement"]["c2"] = rel(c2, oracle);
    }
    return j;
}

}  // namespace pks
