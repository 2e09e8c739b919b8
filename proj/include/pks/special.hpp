#pragma once

#include <cmath>

#include <gsl/gsl_sf_bessel.h>

#include "pks/error.hpp"

namespace pks {

/// Spherical average of exp(z (cos theta - 1)) over S^{n-1}, i.e.
/// e^{-z} Gamma(n/2) (z/2)^{1-n/2} I_{n/2-1}(z). Bounded by 1, decays like z^{-(n-1)/2}.
inline double sphere_average_scaled(int n, double z) {
    require(z >= 0.0, ErrorCode::InvalidParameter, "sphere average needs z >= 0");
    switch (n) {
        case 2: return gsl_sf_bessel_I0_scaled(z);
        case 3: return z < 1e-12 ? 1.0 - z : -std::expm1(-2.0 * z) / (2.0 * z);
        case 4: {
            if (z < 1e-4) return (1.0 + z * z / 8.0) * std::exp(-z);
            return 2.0 * gsl_sf_bessel_I1_scaled(z) / z;
        }
        case 5: {
            if (z < 0.1) {
                const double z2 = z * z;
                return (1.0 + z2 / 10.0 + z2 * z2 / 280.0 + z2 * z2 * z2 / 15120.0) * std::exp(-z);
            }
            // (z cosh z - sinh z) e^{-z} written without overflow.
            const double e2 = std::exp(-2.0 * z);
            return 3.0 * (0.5 * z * (1.0 + e2) - 0.5 * (1.0 - e2)) / (z * z * z);
        }
        default: throw Error(ErrorCode::InvalidParameter, "unsupported dimension " + std::to_string(n));
    }
}

}  // namespace pks
