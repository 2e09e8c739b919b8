#pragma once

#include <cmath>
#include <numbers>

#include <gsl/gsl_sf_gamma.h>

#include "pks/error.hpp"

namespace pks {

inline constexpr double pi = std::numbers::pi;

inline void require_dim(int n) {
    require(n >= 2 && n <= 5, ErrorCode::InvalidParameter,
            "dimension must be in {2,3,4,5}, got " + std::to_string(n));
}

/// Surface area of the unit sphere S^{n-1}, i.e. n * |B_1|.
inline double sphere_area(int n) {
    switch (n) {
        case 1: return 2.0;
        case 2: return 2.0 * pi;
        case 3: return 4.0 * pi;
        case 4: return 2.0 * pi * pi;
        case 5: return 8.0 * pi * pi / 3.0;
        default: return 2.0 * std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n);
    }
}

/// Standard Gaussian profile (4 pi)^{-n/2} exp(-r^2/4).
inline double gaussian_density(int n, double r) {
    return std::pow(4.0 * pi, -0.5 * n) * std::exp(-0.25 * r * r);
}

/// Heat kernel Gamma_t at radius r in R^n.
inline double heat_kernel(int n, double r, double t) {
    return std::pow(4.0 * pi * t, -0.5 * n) * std::exp(-r * r / (4.0 * t));
}

/// Mass of the standard Gaussian profile inside the ball of radius r,
/// the regularised incomplete gamma P(n/2, r^2/4).
inline double gaussian_mass_within(int n, double r) {
    require_dim(n);
    return gsl_sf_gamma_inc_P(0.5 * n, 0.25 * r * r);
}

/// f_n(tau) = exp((1 - n/2) tau), the weight of the nonlinearity in similarity variables.
inline double similarity_weight(int n, double tau) { return std::exp((1.0 - 0.5 * n) * tau); }

}  // namespace pks
