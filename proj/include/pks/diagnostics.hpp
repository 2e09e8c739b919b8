#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "pks/diagnostics_core.hpp"
#include "pks/evolution.hpp"
#include "pks/fit.hpp"

namespace pks {

struct RelativeEntropy {
    double total = 0.0;         // H[w] = entropy_part + (1/2) f_n int |grad E_n * w|^2
    double entropy_part = 0.0;  // int w log(w / (M G_n))
    double field_energy = 0.0;  // int |grad E_n * w|^2, unweighted
    bool field_energy_truncated = false;  // n = 2: the integral diverges and is cut at the box
};

/// Entropy part only; 0 log 0 = 0, zero mass gives 0.
template <DensityField Field>
double relative_entropy_part(const Field& w) {
    const double mass = total_mass(w);
    if (mass <= 0.0) return 0.0;
    const int n = w.dim();
    std::vector<double> integrand(w.size());
    if constexpr (std::same_as<Field, RadialField>) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double r = w.grid().node(i);
            integrand[i] = w[i] > 0.0 ? w[i] * (std::log(std::max(w[i], log_floor)) - std::log(mass) -
                                                std::log(gaussian_density(n, 0.0)) + 0.25 * r * r)
                                      : 0.0;
        }
        return integrate(RadialField(w.grid_ptr(), std::move(integrand)));
    } else {
        const auto& g = w.grid();
        for (std::size_t iy = 0; iy < g.n(); ++iy)
            for (std::size_t ix = 0; ix < g.n(); ++ix) {
                const std::size_t e = g.index(ix, iy);
                const double r2 = g.coord(ix) * g.coord(ix) + g.coord(iy) * g.coord(iy);
                integrand[e] = w[e] > 0.0 ? w[e] * (std::log(std::max(w[e], log_floor)) - std::log(mass) -
                                                    std::log(gaussian_density(2, 0.0)) + 0.25 * r2)
                                          : 0.0;
            }
        return integrate(CartesianField2D(w.grid_ptr(), std::move(integrand)));
    }
}

/// H[w] at similarity time tau.
inline RelativeEntropy relative_entropy(const RadialField& w, double tau) {
    RelativeEntropy h;
    const int n = w.dim();
    h.entropy_part = relative_entropy_part(w);
    const auto grad = radial_gradient(w);
    std::vector<double> sq(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) sq[i] = grad.values[i] * grad.values[i];
    h.field_energy = integrate(RadialField(w.grid_ptr(), std::move(sq)));
    const double mass = total_mass(w);
    if (n == 2) {
        h.field_energy_truncated = true;
    } else {
        // beyond the grid |grad V| = M / (|S| r^{n-1})
        const double rm = w.grid().r_max();
        h.field_energy += mass * mass / (sphere_area(n) * (n - 2) * std::pow(rm, n - 2));
    }
    h.total = h.entropy_part + 0.5 * similarity_weight(n, tau) * h.field_energy;
    return h;
}

inline RelativeEntropy relative_entropy(const CartesianField2D& w, double tau) {
    RelativeEntropy h;
    h.entropy_part = relative_entropy_part(w);
    const auto grad = cartesian_gradient_2d(w);
    double e = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) e += grad.gx[i] * grad.gx[i] + grad.gy[i] * grad.gy[i];
    h.field_energy = e * w.grid().cell_area();
    h.field_energy_truncated = true;
    h.total = h.entropy_part + 0.5 * similarity_weight(2, tau) * h.field_energy;
    return h;
}

// ------------------------------------------------------------ Phi density

struct PhiPoint {
    std::vector<double> y0;  // spatial centre; radial runs only accept |y0| via y0[0]
    double s1 = 0.0;
};

namespace detail {

/// Record pair bracketing time s and the weight of the later one, linear in log t.
template <DensityField Field>
std::pair<std::size_t, double> bracket(const Trajectory<Field>& traj, double s) {
    const auto& rec = traj.records;
    require(!rec.empty() && !traj.similarity, ErrorCode::InvalidParameter, "Phi needs a physical-time trajectory");
    const double lo = rec.front().t, hi = rec.back().t;
    require(s >= lo * (1 - 1e-12) && s <= hi * (1 + 1e-12), ErrorCode::OutOfRange,
            "time " + std::to_string(s) + " outside the recorded range [" + std::to_string(lo) + ", " +
                std::to_string(hi) + "]");
    for (const auto& r : rec)
        require(r.field.size() > 0, ErrorCode::InsufficientSampling, "trajectory was recorded without fields");
    std::size_t k = 1;
    while (k + 1 < rec.size() && rec[k].t < s) ++k;
    if (rec.size() == 1) return {0, 0.0};
    const double w = std::clamp(std::log(s / rec[k - 1].t) / std::log(rec[k].t / rec[k - 1].t), 0.0, 1.0);
    return {k - 1, w};
}

inline double gaussian_weighted(const RadialField& u, const PhiPoint& z, double rho) {
    const auto& g = u.grid();
    const auto& vol = g.volumes();
    const int n = g.dim();
    const double b = z.y0.empty() ? 0.0 : z.y0[0];
    require(z.y0.size() <= 1, ErrorCode::InvalidParameter, "radial fields take a scalar centre |y0|");
    const double q = 4.0 * rho * rho;
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double r = g.node(i), d = r - b;
        if (d * d > 200.0 * q) continue;
        s += vol[i] * u[i] * std::exp(-d * d / q) * sphere_average_scaled(n, 2.0 * r * b / q);
    }
    return s;
}

inline double gaussian_weighted(const CartesianField2D& u, const PhiPoint& z, double rho) {
    const auto& g = u.grid();
    require(z.y0.size() == 2, ErrorCode::InvalidParameter, "planar Phi needs a 2D centre");
    const double q = 4.0 * rho * rho;
    double s = 0.0;
    for (std::size_t iy = 0; iy < g.n(); ++iy) {
        const double dy = g.coord(iy) - z.y0[1];
        for (std::size_t ix = 0; ix < g.n(); ++ix) {
            const double dx = g.coord(ix) - z.y0[0];
            s += u.at(ix, iy) * std::exp(-(dx * dx + dy * dy) / q);
        }
    }
    return s * g.cell_area();
}

}  // namespace detail

/// Phi_{z1}(rho) = (4 pi)^{-n/2} rho^{2-n} int u(y, s1 - rho^2) exp(-|y - y0|^2 / (4 rho^2)) dy.
template <DensityField Field>
double phi_density(const Trajectory<Field>& traj, const PhiPoint& z, double rho) {
    require(rho > 0.0, ErrorCode::InvalidParameter, "rho must be > 0");
    const double s = z.s1 - rho * rho;
    const auto [k, w] = detail::bracket(traj, s);
    const double a = detail::gaussian_weighted(traj.records[k].field, z, rho);
    const double b = w > 0.0 ? detail::gaussian_weighted(traj.records[k + 1].field, z, rho) : a;
    const int n = traj.dim;
    return std::pow(4.0 * pi, -0.5 * n) * std::pow(rho, 2.0 - n) * ((1.0 - w) * a + w * b);
}

struct PhiScan {
    std::vector<double> rho, phi, margin;  // margin: dPhi/drho - (1 - M/8pi)(2/rho) Phi
    double min_margin = infinity;
    double min_relative_margin = infinity;  // min of margin / Phi
};

/// Three-point differences in rho; rho_grid increasing.
template <DensityField Field>
PhiScan phi_monotonicity_check(const Trajectory<Field>& traj, const PhiPoint& z, const std::vector<double>& rho_grid) {
    require(traj.dim == 2, ErrorCode::InvalidParameter, "the monotonicity law is two-dimensional");
    require(rho_grid.size() >= 3, ErrorCode::InvalidParameter, "need at least 3 rho values");
    PhiScan scan;
    scan.rho = rho_grid;
    for (double r : rho_grid) scan.phi.push_back(phi_density(traj, z, r));
    const double mass = traj.records.front().moments.mass;
    const double coef = 1.0 - mass / (8.0 * pi);
    const std::size_t m = rho_grid.size();
    for (std::size_t i = 0; i < m; ++i) {
        // derivative of the parabola through three neighbouring samples
        const std::size_t c = std::clamp<std::size_t>(i, 1, m - 2);
        const double x = rho_grid[i], x0 = rho_grid[c - 1], x1 = rho_grid[c], x2 = rho_grid[c + 1];
        const double d = scan.phi[c - 1] * (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2)) +
                         scan.phi[c] * (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
                         scan.phi[c + 1] * (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
        const double margin = d - coef * 2.0 / rho_grid[i] * scan.phi[i];
        scan.margin.push_back(margin);
        scan.min_margin = std::min(scan.min_margin, margin);
        if (scan.phi[i] > 0.0) scan.min_relative_margin = std::min(scan.min_relative_margin, margin / scan.phi[i]);
    }
    return scan;
}

inline void write_phi_csv(std::ostream& os, const PhiScan& scan) {
    os << std::setprecision(17) << "rho,phi,margin\n";
    for (std::size_t i = 0; i < scan.rho.size(); ++i) os << scan.rho[i] << "," << scan.phi[i] << "," << scan.margin[i] << "\n";
}

// ------------------------------------------------------- trajectory summaries

/// sup over records of (1+t)^{n/2} |u|_inf, with (1+t) in the plane.
template <DensityField Field>
double decay_envelope(const Trajectory<Field>& traj) {
    require(!traj.blowup, ErrorCode::BlowupTrajectory, "trajectory blew up at t = " + std::to_string(traj.blowup_time));
    double env = 0.0;
    for (const auto& r : traj.records) env = std::max(env, std::pow(1.0 + r.t, 0.5 * traj.dim) * r.sup_norm);
    return env;
}

/// Least-squares slope of the second moment over records with t in [t0, t1].
template <DensityField Field>
RateFit virial_fit(const Trajectory<Field>& traj, double t0 = 0.0, double t1 = infinity) {
    std::vector<double> t, m2;
    for (const auto& r : traj.records)
        if (r.t >= t0 && r.t <= t1) {
            t.push_back(r.t);
            m2.push_back(r.moments.second_moment);
        }
    return fit_line(t, m2);
}

inline double virial_rate_2d(double mass) { return 4.0 * mass * (1.0 - mass / (8.0 * pi)); }

struct DiagnosticsRecord {
    double t = 0.0;
    double mass = 0.0;
    double second_moment = 0.0;
    double sup_norm = 0.0;
    double l1_dist_to_profile = 0.0;
    double free_energy_2d = std::numeric_limits<double>::quiet_NaN();
    double relative_entropy = std::numeric_limits<double>::quiet_NaN();
    double virial_slope_running = std::numeric_limits<double>::quiet_NaN();
};

/// Per-record diagnostics. Relative entropy is taken of the similarity field.
template <DensityField Field>
std::vector<DiagnosticsRecord> diagnostics_table(const Trajectory<Field>& traj) {
    std::vector<DiagnosticsRecord> out;
    const auto& rec = traj.records;
    for (std::size_t k = 0; k < rec.size(); ++k) {
        DiagnosticsRecord d;
        d.t = rec[k].t;
        d.mass = rec[k].moments.mass;
        d.second_moment = rec[k].moments.second_moment;
        d.sup_norm = rec[k].sup_norm;
        d.l1_dist_to_profile = rec[k].l1_err_vs_profile;
        d.free_energy_2d = rec[k].free_energy;
        if (rec[k].field.size() > 0) {
            try {
                if (traj.similarity) {
                    d.relative_entropy = relative_entropy(rec[k].field, rec[k].t).total;
                } else {
                    const auto s = to_similarity(rec[k].field, rec[k].t);
                    d.relative_entropy = relative_entropy(s.field, s.tau).total;
                }
            } catch (const Error&) {
                // leave NaN when the rescaled field leaves the box
            }
        }
        if (rec.size() > 1) {
            const std::size_t a = k == 0 ? 0 : k - 1, b = k + 1 == rec.size() ? k : k + 1;
            d.virial_slope_running = (rec[b].moments.second_moment - rec[a].moments.second_moment) / (rec[b].t - rec[a].t);
        }
        out.push_back(d);
    }
    return out;
}

inline void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& rows, bool similarity = false) {
    os << std::setprecision(17) << (similarity ? "tau" : "t")
       << ",mass,second_moment,sup_norm,l1_dist_to_profile,free_energy_2d,relative_entropy,virial_slope_running\n";
    for (const auto& d : rows)
        os << d.t << "," << d.mass << "," << d.second_moment << "," << d.sup_norm << "," << d.l1_dist_to_profile << ","
           << d.free_energy_2d << "," << d.relative_entropy << "," << d.virial_slope_running << "\n";
}

}  // namespace pks
