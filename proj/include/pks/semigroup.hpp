#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "pks/fft.hpp"
#include "pks/fit.hpp"
#include "pks/fields.hpp"
#include "pks/radial_kernel.hpp"
#include "pks/series.hpp"

namespace pks {

struct KernelParams {
    int dim = 2;
    double a = 0.0;       // 1 - e^{-tau}
    double shrink = 1.0;  // e^{-tau/2}

    static KernelParams at(int n, double tau) {
        require(tau > 0.0 && std::isfinite(tau), ErrorCode::InvalidParameter, "semigroup needs tau > 0");
        return {n, -std::expm1(-tau), std::exp(-0.5 * tau)};
    }
};

// ------------------------------------------------------------------ heat flow

inline RadialField heat_evolve(const RadialField& u, double t) {
    require(t > 0.0 && std::isfinite(t), ErrorCode::InvalidParameter, "heat_evolve needs t > 0");
    const RadialGaussianKernel k(u.grid(), t, 1.0);
    return RadialField(u.grid_ptr(), k.apply(u.values()));
}

/// Periodic spectral heat flow; the density must stay clear of the box edge.
inline CartesianField2D heat_evolve(const CartesianField2D& u, double t) {
    require(t > 0.0 && std::isfinite(t), ErrorCode::InvalidParameter, "heat_evolve needs t > 0");
    const auto& g = u.grid();
    const auto fft = Fft2D::shared(g.n());
    auto spec = fft->forward(u.values());
    const double dk = pi / g.half_width();
    for (std::size_t iy = 0; iy < g.n(); ++iy) {
        const double ky = dk * static_cast<double>(fft->wave_index(iy));
        for (std::size_t ix = 0; ix < fft->half(); ++ix) {
            const double kx = dk * static_cast<double>(ix);
            spec[iy * fft->half() + ix] *= std::exp(-(kx * kx + ky * ky) * t);
        }
    }
    return CartesianField2D(u.grid_ptr(), fft->inverse(std::move(spec)));
}

// ------------------------------------------------------- similarity semigroup

namespace detail {

/// 1D factor of the similarity kernel on the periodic axis:
/// A_ij = (1/N) sum_k exp(-a k^2) cos(k (x_i - x_j / c)). Columns sum to one.
inline std::vector<double> dilated_heat_matrix(const CartesianGrid2D& g, double a, double c) {
    const std::size_t n = g.n();
    const double dk = pi / g.half_width();
    std::vector<double> weight;
    for (std::size_t m = 0; m <= n / 2; ++m) {
        const double k = dk * static_cast<double>(m);
        const double w = std::exp(-a * k * k);
        if (m > 0 && w < 1e-20) break;
        weight.push_back(m == 0 || m == n / 2 ? w : 2.0 * w);
    }
    std::vector<double> A(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double theta = dk * (g.coord(i) - g.coord(j) / c);
            // cos(m theta) by the Chebyshev recurrence.
            double cm1 = 1.0, cm = std::cos(theta), s = weight[0];
            const double two_c = 2.0 * cm;
            for (std::size_t m = 1; m < weight.size(); ++m) {
                s += weight[m] * cm;
                const double next = two_c * cm - cm1;
                cm1 = cm;
                cm = next;
            }
            A[i * n + j] = s / static_cast<double>(n);
        }
    return A;
}

}  // namespace detail

/// S_n(tau) f = (4 pi a)^{-n/2} int f(eta) exp(-|xi - e^{-tau/2} eta|^2 / (4a)) d eta.
inline RadialField similarity_semigroup(const RadialField& f, double tau) {
    const auto p = KernelParams::at(f.dim(), tau);
    const RadialGaussianKernel k(f.grid(), p.a, 1.0 / p.shrink);
    return RadialField(f.grid_ptr(), k.apply(f.values()));
}

inline CartesianField2D similarity_semigroup(const CartesianField2D& f, double tau) {
    const auto p = KernelParams::at(2, tau);
    const auto& g = f.grid();
    const std::size_t n = g.n();
    const auto A = detail::dilated_heat_matrix(g, p.a, 1.0 / p.shrink);
    // out = A F A^T with F[y][x].
    std::vector<double> tmp(n * n, 0.0), out(n * n, 0.0);
    for (std::size_t iy = 0; iy < n; ++iy)
        for (std::size_t ix = 0; ix < n; ++ix) {
            double s = 0.0;
            const double* a = &A[ix * n];
            const double* row = &f.values()[iy * n];
            for (std::size_t jx = 0; jx < n; ++jx) s += a[jx] * row[jx];
            tmp[iy * n + ix] = s;
        }
    for (std::size_t iy = 0; iy < n; ++iy) {
        const double* a = &A[iy * n];
        double* o = &out[iy * n];
        for (std::size_t jy = 0; jy < n; ++jy) {
            const double w = a[jy];
            if (w == 0.0) continue;
            const double* t = &tmp[jy * n];
            for (std::size_t ix = 0; ix < n; ++ix) o[ix] += w * t[ix];
        }
    }
    return CartesianField2D(f.grid_ptr(), std::move(out));
}

// ------------------------------------------------------ first-order expansion

/// M G_n - e^{-tau/2} B0 . grad G_n with M, B0 taken from the moments of f.
inline RadialField first_order_heat_expansion(const RadialField& f, double tau) {
    (void)tau;  // B0 = 0 for radial data
    const double mass = moments(f).mass;
    const int n = f.dim();
    return sample_radial(f.grid_ptr(), [&](double r) { return mass * gaussian_density(n, r); });
}

inline CartesianField2D first_order_heat_expansion(const CartesianField2D& f, double tau) {
    const auto m = moments(f);
    const double e = std::exp(-0.5 * tau);
    return sample_cartesian(f.grid_ptr(), [&](double x, double y) {
        const double g = gaussian_density(2, std::hypot(x, y));
        // grad G_2 = -(xi / 2) G_2
        return m.mass * g + e * 0.5 * (m.center[0] * x + m.center[1] * y) * g;
    });
}

// -------------------------------------------------- kernel Taylor expansion

struct KernelTaylor {
    double lhs = 0.0;
    double t0 = 0.0;
    double t1 = 0.0;
    double t2 = 0.0;
    double t2_closed_form = 0.0;  // (n - (|xi|^2+|z|^2)/2 + (xi.z)^2/4) g e^{-s}, twice t2; kept for comparison
    double remainder = 0.0;     // lhs - (t0 + t1 + t2)
    double envelope = 0.0;      // C e^{-3s/2} (1 + |xi|^6 + |z|^6)
    bool within_envelope = true;
    std::array<double, 5> coefficients{};  // series in r = e^{-s/2}
};

inline constexpr double taylor_envelope_constant = 16.0;

/// Expansion of (1-e^{-s})^{-n/2} exp(-|xi - e^{-s/2} z|^2 / (4(1-e^{-s}))) in r = e^{-s/2}.
inline KernelTaylor kernel_taylor_terms(const std::vector<double>& xi, const std::vector<double>& z, double s, int n) {
    require_dim(n);
    require(xi.size() == static_cast<std::size_t>(n) && z.size() == static_cast<std::size_t>(n),
            ErrorCode::InvalidParameter, "kernel_taylor_terms needs vectors of length n");
    require(s >= 1.0 && std::isfinite(s), ErrorCode::OutOfValidatedRange, "kernel expansion is validated for s >= 1");
    using S = Series<4>;
    const S r = S::variable();
    const S one_minus = 1.0 + (-1.0) * (r * r);
    S dist2;
    double xx = 0.0, zz = 0.0, xz = 0.0;
    for (int k = 0; k < n; ++k) {
        const S d = S::constant(xi[k]) - z[k] * r;
        dist2 = dist2 + d * d;
        xx += xi[k] * xi[k];
        zz += z[k] * z[k];
        xz += xi[k] * z[k];
    }
    const S series = pow(one_minus, -0.5 * n) * exp((-0.25) * (dist2 / one_minus));

    KernelTaylor out;
    for (std::size_t k = 0; k < 5; ++k) out.coefficients[k] = series[k];
    const double rv = std::exp(-0.5 * s);
    const double es = std::exp(-s);
    const double a = -std::expm1(-s);
    double d2 = 0.0;
    for (int k = 0; k < n; ++k) d2 += (xi[k] - rv * z[k]) * (xi[k] - rv * z[k]);
    out.lhs = std::pow(a, -0.5 * n) * std::exp(-d2 / (4.0 * a));
    const double g = std::exp(-0.25 * xx);
    out.t0 = g;
    out.t1 = 0.5 * xz * g * rv;
    out.t2 = series[2] * es;
    out.t2_closed_form = (n - 0.5 * (xx + zz) + 0.25 * xz * xz) * g * es;
    out.remainder = out.lhs - (out.t0 + out.t1 + out.t2);
    out.envelope = taylor_envelope_constant * std::exp(-1.5 * s) * (1.0 + xx * xx * xx + zz * zz * zz);
    out.within_envelope = std::fabs(out.remainder) <= out.envelope;
    return out;
}

struct TaylorRemainderFit {
    double ensemble_exponent = 0.0;   // fit of sup_k |rem_k(s)| / (1 + |xi_k|^6 + |z_k|^6)
    double min_point_exponent = 0.0;  // worst single-point fit over the same s range
    double min_tail_exponent = 0.0;   // worst single-point fit over the upper half of the range
    bool all_within_envelope = true;
};

/// Remainder exponents in units of e^{-s} for sample points drawn uniformly in the unit ball.
template <typename Rng>
TaylorRemainderFit fit_taylor_remainder(int n, std::size_t points, double s_lo, double s_hi, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    auto ball = [&]() {
        std::vector<double> v(static_cast<std::size_t>(n));
        double norm = 0.0;
        for (double& x : v) {
            x = normal(rng);
            norm += x * x;
        }
        const double rad = std::pow(uniform(rng), 1.0 / n) / std::sqrt(norm);
        for (double& x : v) x *= rad;
        return v;
    };
    std::vector<double> ss;
    for (double s = s_lo; s <= s_hi + 1e-12; s += 0.25) ss.push_back(s);
    const double s_mid = 0.5 * (s_lo + s_hi);
    std::vector<double> sup(ss.size(), 0.0);
    TaylorRemainderFit out;
    out.min_point_exponent = out.min_tail_exponent = infinity;
    for (std::size_t k = 0; k < points; ++k) {
        const auto xi = ball(), z = ball();
        std::vector<double> rem, tail_s, tail_rem;
        for (std::size_t i = 0; i < ss.size(); ++i) {
            const auto t = kernel_taylor_terms(xi, z, ss[i], n);
            out.all_within_envelope = out.all_within_envelope && t.within_envelope;
            const double scaled = std::fabs(t.remainder) * taylor_envelope_constant * std::exp(-1.5 * ss[i]) / t.envelope;
            sup[i] = std::max(sup[i], scaled);
            rem.push_back(std::max(std::fabs(t.remainder), 1e-300));
            if (ss[i] >= s_mid) {
                tail_s.push_back(ss[i]);
                tail_rem.push_back(rem.back());
            }
        }
        out.min_point_exponent = std::min(out.min_point_exponent, fit_exponential(ss, rem).slope);
        out.min_tail_exponent = std::min(out.min_tail_exponent, fit_exponential(tail_s, tail_rem).slope);
    }
    out.ensemble_exponent = fit_exponential(ss, sup).slope;
    return out;
}

}  // namespace pks
