#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <iomanip>
#include <limits>
#include <list>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pks/diagnostics_core.hpp"
#include "pks/semigroup.hpp"

namespace pks {

enum class AdvectionScheme { conservative_upwind, pseudo_spectral };

inline std::string to_string(AdvectionScheme s) {
    return s == AdvectionScheme::conservative_upwind ? "conservative-upwind" : "pseudo-spectral";
}

struct SolverConfig {
    double dt_initial = 1e-3;
    double safety = 0.5;            // CFL safety factor in (0, 1)
    double t_start = 1.0;           // time (or tau) carried by the initial data
    double t_end = 10.0;            // physical end time, or tau_end for similarity runs
    double dt_max_fraction = 0.01;  // physical runs: dt <= fraction * t
    std::optional<AdvectionScheme> scheme;
    bool nonlinear = true;
    double clamp_tolerance = default_clamp_tolerance;
    int records_per_decade = 32;
    double record_interval = 0.1;  // similarity runs: record spacing in tau
    double blowup_factor = 1e6;
    double blowup_sup = 0.0;  // absolute sup-norm trigger used by step(); evolve sets it
    double dt_min = 1e-12;
    int max_rejections = 40;
    bool keep_fields = true;

    void validate() const {
        require(dt_initial > 0.0 && std::isfinite(dt_initial), ErrorCode::InvalidParameter, "dt_initial must be > 0");
        require(safety > 0.0 && safety < 1.0, ErrorCode::InvalidParameter, "CFL safety factor must lie in (0, 1)");
        require(t_end > t_start, ErrorCode::InvalidParameter, "t_end must exceed t_start");
        require(records_per_decade >= 1 && record_interval > 0.0, ErrorCode::InvalidParameter, "bad record schedule");
        require(clamp_tolerance >= 0.0, ErrorCode::InvalidParameter, "clamp tolerance must be >= 0");
    }
};

template <DensityField Field>
struct Record {
    double t = 0.0;
    Field field;
    MomentSet moments;
    double sup_norm = 0.0;
    double free_energy = std::numeric_limits<double>::quiet_NaN();
    double l1_err_vs_profile = std::numeric_limits<double>::quiet_NaN();
};

template <DensityField Field>
struct Trajectory {
    std::vector<Record<Field>> records;
    SolverConfig config;
    int dim = 2;
    bool similarity = false;
    bool blowup = false;
    double blowup_time = std::numeric_limits<double>::quiet_NaN();
    std::string blowup_reason;
    long steps = 0;
};

using RadialTrajectory = Trajectory<RadialField>;
using CartesianTrajectory = Trajectory<CartesianField2D>;

namespace detail {

/// Small LRU of banded kernels keyed by (a, c).
class KernelCache {
public:
    std::shared_ptr<const RadialGaussianKernel> get(const RadialGrid& grid, double a, double c) {
        for (auto it = entries_.begin(); it != entries_.end(); ++it)
            if (it->a == a && it->c == c) {
                entries_.splice(entries_.begin(), entries_, it);
                return entries_.front().kernel;
            }
        entries_.push_front({a, c, std::make_shared<const RadialGaussianKernel>(grid, a, c)});
        if (entries_.size() > 8) entries_.pop_back();
        return entries_.front().kernel;
    }

private:
    struct Entry {
        double a, c;
        std::shared_ptr<const RadialGaussianKernel> kernel;
    };
    std::list<Entry> entries_;
};

}  // namespace detail

/// Operator-split integrator for one run; owns its caches.
template <DensityField Field>
class Stepper;

template <>
class Stepper<RadialField> {
public:
    explicit Stepper(const SolverConfig& cfg) : cfg_(cfg) {
        require(!cfg.scheme || *cfg.scheme == AdvectionScheme::conservative_upwind, ErrorCode::InvalidParameter,
                "radial fields use the conservative upwind scheme");
    }

    /// exp(h Delta) for physical runs, S_n(h) for similarity runs.
    std::vector<double> diffuse(const RadialField& u, double h, bool similarity) {
        const double a = similarity ? -std::expm1(-h) : h;
        const double c = similarity ? std::exp(0.5 * h) : 1.0;
        return cache_.get(u.grid(), a, c)->apply(u.values());
    }

    /// Finite-volume rate -weight div(u grad V) with limited faces taken from
    /// the upwind (outer) cell. Cell i has volume W_i; the flux through its
    /// outer face is -weight m_i u*, m_i the mass of cells 1..i (Gauss law).
    double rate(const RadialGrid& g, const std::vector<double>& u, double weight, std::vector<double>& du) const {
        const std::size_t m = u.size();
        const auto& W = g.volumes();
        std::vector<double> mass(m, 0.0);
        for (std::size_t i = 1; i < m; ++i) mass[i] = mass[i - 1] + W[i] * u[i];
        auto at = [&](std::size_t j) { return j < m ? u[j] : 0.0; };
        std::vector<double> flux(m, 0.0);  // flux[i]: outward flux through the outer face of cell i
        for (std::size_t i = 1; i + 1 < m; ++i) {
            const std::size_t j = i + 1;
            // third-order upwind-biased face value, kept between the two neighbours
            double face = u[j] - (at(j + 1) - u[j]) / 6.0 - (u[j] - u[j - 1]) / 3.0;
            face = std::clamp(face, std::min(u[j], u[j - 1]), std::max(u[j], u[j - 1]));
            face = std::min(face, 2.0 * u[j]);  // positivity under the CFL bound
            flux[i] = -weight * mass[i] * face;
        }
        du.assign(m, 0.0);
        double dt_max = infinity;
        for (std::size_t i = 1; i < m; ++i) {
            du[i] = -(flux[i] - flux[i - 1]) / W[i];
            if (mass[i - 1] > 0.0 && weight > 0.0) dt_max = std::min(dt_max, W[i] / (2.0 * weight * mass[i - 1]));
        }
        return dt_max;
    }

    double cfl(const RadialField& u, double weight) const {
        std::vector<double> du;
        return cfg_.safety * rate(u.grid(), u.values(), weight, du);
    }

    /// One SSP-RK2 advection step.
    void advect(RadialField& u, double dt, double weight) const {
        const auto& g = u.grid();
        std::vector<double> k, u1 = u.values();
        const double limit = rate(g, u.values(), weight, k);
        if (dt > limit) throw Error(ErrorCode::StepRejected, "advection step exceeds the CFL limit");
        for (std::size_t i = 0; i < u1.size(); ++i) u1[i] += dt * k[i];
        rate(g, u1, weight, k);
        auto& v = u.values();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * v[i] + 0.5 * (u1[i] + dt * k[i]);
        slave_origin(u);
    }

    /// The r = 0 node carries no volume; keep it on the even extrapolation.
    static void slave_origin(RadialField& u) {
        const double r1 = u.grid().node(1), r2 = u.grid().node(2);
        u[0] = (r2 * r2 * u[1] - r1 * r1 * u[2]) / (r2 * r2 - r1 * r1);
    }

private:
    SolverConfig cfg_;
    detail::KernelCache cache_;
};

template <>
class Stepper<CartesianField2D> {
public:
    explicit Stepper(const SolverConfig& cfg) : cfg_(cfg) {
        require(!cfg.scheme || *cfg.scheme == AdvectionScheme::pseudo_spectral, ErrorCode::InvalidParameter,
                "Cartesian fields use the pseudo-spectral scheme");
    }

    std::vector<double> diffuse(const CartesianField2D& u, double h, bool similarity) {
        if (!similarity) return heat_evolve(u, h).values();
        return similarity_semigroup(u, h).values();
    }

    /// -weight div(u grad V), divergence taken spectrally with 2/3 dealiasing.
    double rate(const CartesianField2D& u, double weight, std::vector<double>& du) const {
        const auto& g = u.grid();
        const std::size_t n = g.n();
        const auto grad = cartesian_gradient_2d(u);
        std::vector<double> fx(u.size()), fy(u.size());
        double vmax = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            fx[i] = u[i] * grad.gx[i];
            fy[i] = u[i] * grad.gy[i];
            vmax = std::max(vmax, grad.magnitude(i));
        }
        const auto fft = Fft2D::shared(n);
        auto sx = fft->forward(std::move(fx));
        const auto sy = fft->forward(std::move(fy));
        const double dk = pi / g.half_width();
        const long cut = static_cast<long>(n) / 3;
        const std::complex<double> I(0.0, 1.0);
        for (std::size_t iy = 0; iy < n; ++iy) {
            const long my = fft->wave_index(iy);
            for (std::size_t ix = 0; ix < fft->half(); ++ix) {
                const std::size_t e = iy * fft->half() + ix;
                const long mx = static_cast<long>(ix);
                if (std::labs(my) > cut || mx > cut) {
                    sx[e] = 0.0;
                    continue;
                }
                sx[e] = -weight * I * dk * (static_cast<double>(mx) * sx[e] + static_cast<double>(my) * sy[e]);
            }
        }
        du = fft->inverse(std::move(sx));
        return vmax > 0.0 && weight > 0.0 ? g.spacing() / (weight * vmax) : infinity;
    }

    double cfl(const CartesianField2D& u, double weight) const {
        std::vector<double> du;
        return cfg_.safety * rate(u, weight, du);
    }

    /// Classical RK4.
    void advect(CartesianField2D& u, double dt, double weight) const {
        std::vector<double> k1, k2, k3, k4;
        const double limit = rate(u, weight, k1);
        if (dt > limit) throw Error(ErrorCode::StepRejected, "advection step exceeds the CFL limit");
        auto shifted = [&](const std::vector<double>& k, double c) {
            CartesianField2D v = u;
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += c * dt * k[i];
            return v;
        };
        rate(shifted(k1, 0.5), weight, k2);
        rate(shifted(k2, 0.5), weight, k3);
        rate(shifted(k3, 1.0), weight, k4);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

private:
    SolverConfig cfg_;
};

namespace detail {

/// Strang step: half diffusion, full advection, half diffusion.
template <DensityField Field>
Field split_step(Stepper<Field>& st, const Field& u, double dt, double weight, bool similarity,
                 const SolverConfig& cfg) {
    Field v = u;
    v.values() = st.diffuse(u, 0.5 * dt, similarity);
    if (cfg.nonlinear) st.advect(v, dt, weight);
    v.values() = st.diffuse(v, 0.5 * dt, similarity);
    const auto& vals = v.values();
    const double sup = sup_norm(vals);
    for (double x : vals) {
        if (!std::isfinite(x)) throw Error(ErrorCode::StepRejected, "non-finite value after step");
        if (x < -cfg.clamp_tolerance * sup) throw Error(ErrorCode::StepRejected, "negative density after step");
    }
    if (cfg.blowup_sup > 0.0 && sup > cfg.blowup_sup)
        throw Error(ErrorCode::BlowupDetected, "sup norm " + std::to_string(sup) + " exceeds the blow-up trigger");
    return v;
}

inline double ladder(double dt) { return std::exp2(std::floor(std::log2(dt))); }

template <DensityField Field>
Field mass_gaussian(const Field& like, double mass, double t) {
    if constexpr (std::same_as<Field, RadialField>) {
        const int n = like.dim();
        return sample_radial(like.grid_ptr(), [&](double r) { return mass * heat_kernel(n, r, t); });
    } else {
        return sample_cartesian(like.grid_ptr(), [&](double x, double y) { return mass * heat_kernel(2, std::hypot(x, y), t); });
    }
}

template <DensityField Field>
Record<Field> make_record(double t, const Field& u, const SolverConfig& cfg,
                          const std::function<Field(double)>& reference) {
    Record<Field> r;
    r.t = t;
    r.moments = moments(u);
    r.sup_norm = sup_norm(u.values());
    if (u.dim() == 2) {
        try {
            r.free_energy = free_energy_2d(u).value;
        } catch (const Error&) {
            // unresolved second moment: leave NaN
        }
    }
    if (reference) r.l1_err_vs_profile = l1_distance(u, reference(t));
    if (cfg.keep_fields) {
        r.field = u;
        enforce_density(r.field, cfg.clamp_tolerance);
    }
    return r;
}

template <DensityField Field>
Trajectory<Field> run(const Field& u0, const SolverConfig& config, bool similarity,
                      std::function<Field(double)> reference) {
    config.validate();
    Field u = u0;
    enforce_density(u, config.clamp_tolerance);
    Trajectory<Field> traj;
    traj.config = config;
    traj.dim = u.dim();
    traj.similarity = similarity;
    SolverConfig cfg = config;
    if (cfg.blowup_sup <= 0.0) cfg.blowup_sup = cfg.blowup_factor * sup_norm(u.values());
    Stepper<Field> st(cfg);

    // Record schedule.
    std::vector<double> schedule;
    if (similarity) {
        for (long k = 1;; ++k) {
            const double tau = cfg.t_start + static_cast<double>(k) * cfg.record_interval;
            if (tau >= cfg.t_end - 1e-12 * std::max(1.0, std::fabs(cfg.t_end))) break;
            schedule.push_back(tau);
        }
    } else {
        require(cfg.t_start > 0.0, ErrorCode::InvalidParameter, "physical runs need t_start > 0");
        const double base = std::log10(cfg.t_start);
        for (long k = 1;; ++k) {
            const double t = std::pow(10.0, base + static_cast<double>(k) / cfg.records_per_decade);
            if (t >= cfg.t_end * (1 - 1e-12)) break;
            schedule.push_back(t);
        }
    }
    schedule.push_back(cfg.t_end);

    traj.records.push_back(make_record(cfg.t_start, u, cfg, reference));
    double t = cfg.t_start;
    double dt = cfg.dt_initial;
    double dt_ladder = cfg.dt_initial;
    const int n = u.dim();
    for (double target : schedule) {
        while (t < target) {
            const double weight = similarity ? similarity_weight(n, t + 0.5 * dt) : 1.0;
            // growth starts from the last ladder step, not from a step cut short by a record
            double want = similarity ? cfg.dt_initial : std::min(2.0 * dt_ladder, cfg.dt_max_fraction * t);
            if (cfg.nonlinear) want = std::min(want, st.cfl(u, weight));
            if (want < cfg.dt_min) {
                traj.blowup = true;
                traj.blowup_time = t;
                traj.blowup_reason = "time step collapsed below dt_min";
                return traj;
            }
            dt = ladder(want);
            dt_ladder = dt;
            bool last = false;
            if (t + dt >= target * (1 - 1e-14) || target - (t + dt) < 1e-3 * dt) {
                dt = target - t;
                last = true;
            }
            int rejections = 0;
            for (;;) {
                try {
                    const double w = similarity ? similarity_weight(n, t + 0.5 * dt) : 1.0;
                    u = split_step(st, u, dt, w, similarity, cfg);
                    // Zeroing spectral ringing on the evolving state rectifies it into mass
                    // that piles up at the box edge; the Fourier state keeps it instead.
                    if constexpr (std::same_as<Field, RadialField>) enforce_density(u, cfg.clamp_tolerance);
                    break;
                } catch (const Error& e) {
                    if (e.code() == ErrorCode::BlowupDetected) {
                        traj.blowup = true;
                        traj.blowup_time = t + dt;
                        traj.blowup_reason = e.what();
                        return traj;
                    }
                    if (e.code() != ErrorCode::StepRejected) throw;
                    if (++rejections > cfg.max_rejections)
                        throw Error(ErrorCode::StiffnessFailure, "step rejected " + std::to_string(rejections) +
                                                                     " times at t = " + std::to_string(t));
                    dt *= 0.5;
                    dt_ladder = std::min(dt_ladder, dt);
                    last = false;
                    if (dt < cfg.dt_min) {
                        traj.blowup = true;
                        traj.blowup_time = t;
                        traj.blowup_reason = "time step collapsed below dt_min";
                        return traj;
                    }
                }
            }
            t = last ? target : t + dt;
            ++traj.steps;
        }
        traj.records.push_back(make_record(t, u, cfg, reference));
    }
    return traj;
}

}  // namespace detail

/// One operator-split step in physical time.
template <DensityField Field>
Field step(const Field& u, double dt, const SolverConfig& config) {
    require(dt > 0.0 && std::isfinite(dt), ErrorCode::InvalidParameter, "dt must be > 0");
    Stepper<Field> st(config);
    if (config.nonlinear && dt > st.cfl(u, 1.0))
        throw Error(ErrorCode::StepRejected, "dt exceeds the CFL limit; halve and retry");
    auto v = detail::split_step(st, u, dt, 1.0, false, config);
    enforce_density(v, config.clamp_tolerance);
    return v;
}

/// Adaptive run in physical time from t_start to t_end; records on a log schedule.
/// The default reference for l1_err_vs_profile is M Gamma_t.
template <DensityField Field>
Trajectory<Field> evolve(const Field& u0, const SolverConfig& config, std::function<Field(double)> reference = {}) {
    if (!reference) {
        const double mass = total_mass(u0);
        reference = [mass, u0](double t) { return detail::mass_gaussian(u0, mass, t); };
    }
    return detail::run(u0, config, false, std::move(reference));
}

/// Run of the rescaled equation in tau from t_start to t_end with fixed d tau =
/// dt_initial (halved while the CFL limit requires). Default reference: M G_n.
template <DensityField Field>
Trajectory<Field> evolve_similarity(const Field& u0, const SolverConfig& config,
                                    std::function<Field(double)> reference = {}) {
    if (!reference) {
        const double mass = total_mass(u0);
        const Field g = detail::mass_gaussian(u0, mass, 1.0);
        reference = [g](double) { return g; };
    }
    return detail::run(u0, config, true, std::move(reference));
}

// ------------------------------------------------------------ Duhamel check

namespace detail {

/// div(u grad E_n * u) on the grid.
inline std::vector<double> nonlinear_divergence(const RadialField& u) {
    std::vector<double> d1, d2;
    radial_derivatives(u.grid(), u.values(), d1, d2);
    const auto dv = radial_gradient(u).values;
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = d1[i] * dv[i] - u[i] * u[i];
    return out;
}

inline std::vector<double> nonlinear_divergence(const CartesianField2D& u) {
    SolverConfig cfg;
    Stepper<CartesianField2D> st(cfg);
    std::vector<double> du;
    st.rate(u, 1.0, du);
    for (double& x : du) x = -x;
    return du;
}

/// (Gamma_t * f)(x) at selected nodes by direct quadrature.
inline std::vector<double> heat_at(const RadialField& f, double t, const std::vector<std::size_t>& nodes) {
    const auto& g = f.grid();
    const auto& W = g.volumes();
    const int n = g.dim();
    const double pref = std::pow(4.0 * pi * t, -0.5 * n);
    std::vector<double> out;
    for (std::size_t i : nodes) {
        const double x = g.node(i);
        double s = 0.0;
        for (std::size_t j = 1; j < f.size(); ++j) {
            const double d = x - g.node(j);
            if (d * d > 400.0 * t) continue;
            s += W[j] * f[j] * std::exp(-d * d / (4.0 * t)) * sphere_average_scaled(n, x * g.node(j) / (2.0 * t));
        }
        out.push_back(pref * s);
    }
    return out;
}

inline std::vector<double> heat_at(const CartesianField2D& f, double t, const std::vector<std::size_t>& nodes) {
    const auto& g = f.grid();
    const double pref = g.cell_area() / (4.0 * pi * t);
    std::vector<double> out;
    for (std::size_t e : nodes) {
        const double x = g.coord(e % g.n()), y = g.coord(e / g.n());
        double s = 0.0;
        for (std::size_t iy = 0; iy < g.n(); ++iy) {
            const double dy = y - g.coord(iy);
            if (dy * dy > 400.0 * t) continue;
            for (std::size_t ix = 0; ix < g.n(); ++ix) {
                const double dx = x - g.coord(ix);
                const double d2 = dx * dx + dy * dy;
                if (d2 > 400.0 * t) continue;
                s += f.at(ix, iy) * std::exp(-d2 / (4.0 * t));
            }
        }
        out.push_back(pref * s);
    }
    return out;
}

inline std::vector<std::size_t> duhamel_points(const RadialField& u, std::size_t count) {
    const auto m = u.grid().cumulative(u.values());
    const double total = m.back();
    std::size_t last = 1;
    while (last + 1 < u.size() && m[last] < (1.0 - 1e-8) * total) ++last;
    std::vector<std::size_t> pts;
    for (std::size_t k = 0; k < count; ++k) pts.push_back(k * last / (count - 1));
    return pts;
}

inline std::vector<std::size_t> duhamel_points(const CartesianField2D& u, std::size_t count) {
    const auto& g = u.grid();
    const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
    std::vector<std::size_t> pts;
    const std::size_t lo = g.n() / 4, hi = 3 * g.n() / 4;
    for (std::size_t a = 0; a < side; ++a)
        for (std::size_t b = 0; b < side; ++b)
            pts.push_back(g.index(lo + a * (hi - lo) / (side - 1), lo + b * (hi - lo) / (side - 1)));
    return pts;
}

}  // namespace detail

struct DuhamelOptions {
    std::vector<std::size_t> record_indices;  // empty: the last record
    std::size_t points = 48;
    bool drop_nonlinear_history = false;  // negative control
};

/// max over sampled (x, t) of |u - Gamma * u0 + int Gamma * div(u grad V)| / max|u(t)|,
/// the time integral by the trapezoid rule in log s over the stored records.
template <DensityField Field>
double duhamel_residual(const Trajectory<Field>& traj, const DuhamelOptions& opt = {}) {
    require(traj.records.size() >= 64, ErrorCode::InsufficientSampling,
            "Duhamel check needs at least 64 records, got " + std::to_string(traj.records.size()));
    require(!traj.similarity, ErrorCode::InvalidParameter, "Duhamel check runs on physical-time trajectories");
    for (const auto& r : traj.records)
        require(r.field.size() > 0, ErrorCode::InsufficientSampling, "trajectory was recorded without fields");
    auto indices = opt.record_indices;
    if (indices.empty()) indices.push_back(traj.records.size() - 1);
    const bool nonlinear = traj.config.nonlinear && !opt.drop_nonlinear_history;
    std::vector<std::vector<double>> divs;
    if (nonlinear)
        for (const auto& r : traj.records) divs.push_back(detail::nonlinear_divergence(r.field));

    const auto& first = traj.records.front();
    double worst = 0.0;
    for (std::size_t k : indices) {
        require(k > 0 && k < traj.records.size(), ErrorCode::InvalidParameter, "record index out of range");
        const auto& rec = traj.records[k];
        const auto pts = detail::duhamel_points(rec.field, opt.points);
        auto rhs = detail::heat_at(first.field, rec.t - first.t, pts);
        if (nonlinear) {
            // integrand values I_j(x) = Gamma_{t - s_j} * D(s_j); at s_j = t it is D itself
            std::vector<std::vector<double>> I(k + 1);
            for (std::size_t j = 0; j <= k; ++j) {
                Field d = traj.records[j].field;
                d.values() = divs[j];
                if (j == k) {
                    for (std::size_t p : pts) I[j].push_back(d[p]);
                } else {
                    I[j] = detail::heat_at(d, rec.t - traj.records[j].t, pts);
                }
            }
            for (std::size_t q = 0; q < pts.size(); ++q) {
                double integral = 0.0;
                for (std::size_t j = 1; j <= k; ++j) {
                    const double s0 = traj.records[j - 1].t, s1 = traj.records[j].t;
                    integral += 0.5 * std::log(s1 / s0) * (s0 * I[j - 1][q] + s1 * I[j][q]);
                }
                rhs[q] -= integral;
            }
        }
        const double scale = sup_norm(rec.field.values());
        for (std::size_t q = 0; q < pts.size(); ++q)
            worst = std::max(worst, std::fabs(rec.field[pts[q]] - rhs[q]) / scale);
    }
    return worst;
}

// ------------------------------------------------------------------- export

template <DensityField Field>
void write_trajectory_csv(std::ostream& os, const Trajectory<Field>& traj) {
    os << std::setprecision(17);
    os << (traj.similarity ? "tau" : "t") << ",mass,second_moment,sup_norm,l1_err_vs_profile,free_energy\n";
    for (const auto& r : traj.records)
        os << r.t << "," << r.moments.mass << "," << r.moments.second_moment << "," << r.sup_norm << ","
           << r.l1_err_vs_profile << "," << r.free_energy << "\n";
}

inline nlohmann::json config_json(const SolverConfig& c) {
    return {{"dt_initial", c.dt_initial},
            {"safety", c.safety},
            {"t_start", c.t_start},
            {"t_end", c.t_end},
            {"dt_max_fraction", c.dt_max_fraction},
            {"scheme", c.scheme ? to_string(*c.scheme) : "default"},
            {"nonlinearity", c.nonlinear ? "on" : "off"},
            {"clamp_tolerance", c.clamp_tolerance},
            {"records_per_decade", c.records_per_decade},
            {"record_interval", c.record_interval},
            {"blowup_factor", c.blowup_factor},
            {"dt_min", c.dt_min}};
}

template <DensityField Field>
nlohmann::json trajectory_manifest(const Trajectory<Field>& traj) {
    nlohmann::json j;
    j["config"] = config_json(traj.config);
    j["dim"] = traj.dim;
    j["similarity"] = traj.similarity;
    j["records"] = traj.records.size();
    j["steps"] = traj.steps;
    j["blowup_flag"] = traj.blowup;
    if (traj.blowup) {
        j["blowup_time"] = traj.blowup_time;
        j["blowup_reason"] = traj.blowup_reason;
    }
    return j;
}

}  // namespace pks
