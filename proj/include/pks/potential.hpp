#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <utility>
#include <vector>

#include "pks/fft.hpp"
#include "pks/fields.hpp"

namespace pks {

/// V'(r) of V = E_n * u for a radial density, together with the enclosed mass.
struct RadialGradient {
    RadialGridPtr grid;
    std::vector<double> values;
    std::vector<double> enclosed_mass;
};

/// Gradient of the logarithmic potential on a Cartesian grid.
struct CartesianGradient2D {
    CartesianGridPtr grid;
    std::vector<double> gx;
    std::vector<double> gy;

    double magnitude(std::size_t i) const { return std::hypot(gx[i], gy[i]); }
};

struct GradientBound {
    double lhs = 0.0;
    double rhs_core = 0.0;
    double ratio = 0.0;
};

/// Gauss law: -V'(r) |S^{n-1}| r^{n-1} = m(r), with m the cumulative quadrature
/// that closes on total_mass.
inline RadialGradient radial_gradient(const RadialField& u) {
    const auto& grid = u.grid();
    RadialGradient out{u.grid_ptr(), std::vector<double>(u.size(), 0.0), grid.cumulative(u.values())};
    const double area = sphere_area(grid.dim());
    for (std::size_t i = 1; i < u.size(); ++i) {
        const double r = grid.node(i);
        out.values[i] = -out.enclosed_mass[i] / (area * std::pow(r, grid.dim() - 1));
    }
    return out;
}

/// V = E_n * u in the gauge V(0) = 0.
inline std::vector<double> radial_potential(const RadialField& u) {
    return u.grid().cumulative_line(radial_gradient(u).values);
}

/// (E_n * u)(0) without any gauge: -int u log|y| dy / (2 pi) in 2D and
/// int u |y|^{2-n} dy / ((n-2)|S^{n-1}|) otherwise.
inline double radial_potential_at_origin(const RadialField& u) {
    const auto& grid = u.grid();
    const int n = grid.dim();
    const auto& w = grid.volumes();
    double s = 0.0;
    for (std::size_t i = 1; i < u.size(); ++i) {
        const double r = grid.node(i);
        s += w[i] * u[i] * (n == 2 ? -std::log(r) / (2.0 * pi) : std::pow(r, 2 - n) / ((n - 2) * sphere_area(n)));
    }
    return s;
}

namespace detail {

/// Spectral multipliers of the free-space kernel truncated at radius R on a
/// zero-padded periodic grid. Truncation beyond the diameter of the data box
/// leaves the convolution unchanged there, and the truncated kernel has a
/// smooth transform, so the FFT convolution is spectrally accurate.
struct LogKernel {
    std::size_t np = 0;
    std::shared_ptr<const Fft2D> fft;
    std::vector<double> grad;  // (1 - J0(kR)) / k^2, multiplied by i k_j
    std::vector<double> pot;   // transform of -log|x| / (2 pi) on |x| < R
    std::vector<double> kx, ky;
};

inline std::size_t padded_size(std::size_t n) {
    // Smallest 2^a 3^b 5^c >= (1 + sqrt 2) n, even.
    const auto need = static_cast<std::size_t>(std::ceil((1.0 + std::sqrt(2.0)) * static_cast<double>(n)));
    for (std::size_t m = need + (need % 2);; m += 2) {
        std::size_t q = m;
        for (std::size_t p : {2u, 3u, 5u})
            while (q % p == 0) q /= p;
        if (q == 1) return m;
    }
}

inline std::shared_ptr<const LogKernel> log_kernel(std::size_t n, double h) {
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, double>, std::shared_ptr<const LogKernel>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[{n, h}];
    if (slot) return slot;
    auto k = std::make_shared<LogKernel>();
    k->np = padded_size(n);
    k->fft = Fft2D::shared(k->np);
    const std::size_t np = k->np;
    const std::size_t half = np / 2 + 1;
    const double period = static_cast<double>(np) * h;
    const double radius = period - static_cast<double>(n) * h;
    const double dk = 2.0 * pi / period;
    k->grad.resize(np * half);
    k->pot.resize(np * half);
    k->kx.resize(np * half);
    k->ky.resize(np * half);
    for (std::size_t iy = 0; iy < np; ++iy) {
        const long my = iy <= np / 2 ? static_cast<long>(iy) : static_cast<long>(iy) - static_cast<long>(np);
        for (std::size_t ix = 0; ix < half; ++ix) {
            const std::size_t e = iy * half + ix;
            const double kx = dk * static_cast<double>(ix);
            const double ky = dk * static_cast<double>(my);
            const double kk = std::hypot(kx, ky);
            // Odd multipliers vanish on the Nyquist lines.
            k->kx[e] = ix == np / 2 ? 0.0 : kx;
            k->ky[e] = iy == np / 2 ? 0.0 : ky;
            if (kk == 0.0) {
                k->grad[e] = 0.0;
                k->pot[e] = 0.25 * radius * radius - 0.5 * radius * radius * std::log(radius);
            } else {
                const double j0 = std::cyl_bessel_j(0.0, kk * radius);
                const double j1 = std::cyl_bessel_j(1.0, kk * radius);
                k->grad[e] = (1.0 - j0) / (kk * kk);
                k->pot[e] = (1.0 - j0) / (kk * kk) - radius * std::log(radius) * j1 / kk;
            }
        }
    }
    slot = k;
    return slot;
}

inline std::vector<std::complex<double>> padded_spectrum(const CartesianField2D& u, const LogKernel& k) {
    const std::size_t n = u.grid().n();
    std::vector<double> pad(k.np * k.np, 0.0);
    for (std::size_t iy = 0; iy < n; ++iy)
        std::copy_n(u.values().begin() + static_cast<long>(iy * n), n, pad.begin() + static_cast<long>(iy * k.np));
    // The h^2 of the forward quadrature cancels the 1/(N h)^2 of the inverse.
    return k.fft->forward(std::move(pad));
}

inline std::vector<double> crop(const std::vector<double>& pad, std::size_t np, std::size_t n) {
    std::vector<double> out(n * n);
    for (std::size_t iy = 0; iy < n; ++iy)
        std::copy_n(pad.begin() + static_cast<long>(iy * np), n, out.begin() + static_cast<long>(iy * n));
    return out;
}

}  // namespace detail

/// Mass outside the inner 7/8 of the box must be negligible for the periodic
/// substeps and the padded convolution to see an isolated density. The sum is
/// signed and only a positive excess counts: a real tail is positive, spectral
/// ringing largely cancels.
inline void require_interior_support(const CartesianField2D& u, double fraction = 1e-8) {
    const auto& g = u.grid();
    const double inner = 0.875 * g.half_width();
    double total = 0.0, outside = 0.0;
    for (std::size_t iy = 0; iy < g.n(); ++iy)
        for (std::size_t ix = 0; ix < g.n(); ++ix) {
            const double v = u.at(ix, iy);
            total += std::fabs(v);
            if (std::fabs(g.coord(ix)) > inner || std::fabs(g.coord(iy)) > inner) outside += v;
        }
    if (outside <= fraction * total) return;
    std::ostringstream msg;
    msg << "mass fraction " << std::setprecision(3) << outside / total << " lies outside the inner 7/8 of the box";
    throw Error(ErrorCode::DomainTooSmall, msg.str());
}

inline CartesianGradient2D cartesian_gradient_2d(const CartesianField2D& u, bool check_support = true) {
    if (check_support) require_interior_support(u);
    const auto& g = u.grid();
    const auto k = detail::log_kernel(g.n(), g.spacing());
    const auto spec = detail::padded_spectrum(u, *k);
    std::vector<std::complex<double>> sx(spec.size()), sy(spec.size());
    const std::complex<double> I(0.0, 1.0);
    for (std::size_t e = 0; e < spec.size(); ++e) {
        sx[e] = I * k->kx[e] * k->grad[e] * spec[e];
        sy[e] = I * k->ky[e] * k->grad[e] * spec[e];
    }
    return {u.grid_ptr(), detail::crop(k->fft->inverse(std::move(sx)), k->np, g.n()),
            detail::crop(k->fft->inverse(std::move(sy)), k->np, g.n())};
}

/// E_2 * u with E_2 = -log|x| / (2 pi); no additive gauge.
inline std::vector<double> cartesian_potential_2d(const CartesianField2D& u, bool check_support = true) {
    if (check_support) require_interior_support(u);
    const auto& g = u.grid();
    const auto k = detail::log_kernel(g.n(), g.spacing());
    auto spec = detail::padded_spectrum(u, *k);
    for (std::size_t e = 0; e < spec.size(); ++e) spec[e] *= k->pot[e];
    return detail::crop(k->fft->inverse(std::move(spec)), k->np, g.n());
}

inline GradientBound sup_gradient_bound_check(const RadialField& u) {
    GradientBound b;
    const int n = u.dim();
    const auto grad = radial_gradient(u);
    for (double v : grad.values) b.lhs = std::max(b.lhs, std::fabs(v));
    const double l1 = lp_norm(u, 1.0);
    const double linf = lp_norm(u, infinity);
    b.rhs_core = std::pow(l1, 1.0 / n) * std::pow(linf, 1.0 - 1.0 / n);
    b.ratio = b.rhs_core > 0.0 ? b.lhs / b.rhs_core : 0.0;
    return b;
}

inline GradientBound sup_gradient_bound_check(const CartesianField2D& u) {
    GradientBound b;
    const auto grad = cartesian_gradient_2d(u);
    for (std::size_t i = 0; i < u.size(); ++i) b.lhs = std::max(b.lhs, grad.magnitude(i));
    b.rhs_core = std::sqrt(lp_norm(u, 1.0) * lp_norm(u, infinity));
    b.ratio = b.rhs_core > 0.0 ? b.lhs / b.rhs_core : 0.0;
    return b;
}

}  // namespace pks
