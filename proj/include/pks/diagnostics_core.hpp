#pragma once

#include <cmath>
#include <limits>

#include "pks/potential.hpp"

namespace pks {

inline constexpr double log_floor = 1e-300;

struct FreeEnergy {
    double value = 0.0;           // gauge E_2 * w = 0 at the origin
    double gauge_constant = 0.0;  // (E_2 * w)(0) with E_2 = -log|x| / (2 pi)
    double absolute = 0.0;        // same functional with the ungauged potential
    double entropy = 0.0;
    double confinement = 0.0;     // (1/4) int w |xi|^2
    double interaction = 0.0;     // -(1/2) int w V, gauge V(0) = 0
};

namespace detail {
inline double w_log_w(double w) { return w > 0.0 ? w * std::log(std::max(w, log_floor)) : 0.0; }

inline void require_second_moment(double outer_share) {
    require(outer_share <= 1e-6, ErrorCode::DivergentMoment,
            "second moment is not resolved on the grid (outer share " + std::to_string(outer_share) + ")");
}
}  // namespace detail

/// F[w] = int w log w + (1/4) int w |xi|^2 - (1/2) int w E_2 * w.
inline FreeEnergy free_energy_2d(const RadialField& w) {
    require(w.dim() == 2, ErrorCode::InvalidParameter, "free_energy_2d needs a 2D field");
    FreeEnergy f;
    const auto& g = w.grid();
    const auto& vol = g.volumes();
    const auto V = radial_potential(w);
    double m2 = 0.0, m2_outer = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double r = g.node(i);
        f.entropy += vol[i] * detail::w_log_w(w[i]);
        m2 += vol[i] * w[i] * r * r;
        if (r > 0.95 * g.r_max()) m2_outer += vol[i] * w[i] * r * r;
        f.interaction -= 0.5 * vol[i] * w[i] * V[i];
        mass += vol[i] * w[i];
    }
    if (m2 > 0.0) detail::require_second_moment(m2_outer / m2);
    f.confinement = 0.25 * m2;
    f.value = f.entropy + f.confinement + f.interaction;
    f.gauge_constant = radial_potential_at_origin(w);
    f.absolute = f.value - 0.5 * f.gauge_constant * mass;
    return f;
}

inline FreeEnergy free_energy_2d(const CartesianField2D& w) {
    FreeEnergy f;
    const auto& g = w.grid();
    const auto V = cartesian_potential_2d(w);
    const double da = g.cell_area();
    const std::size_t o = g.index(g.n() / 2, g.n() / 2);  // the node at the origin
    f.gauge_constant = V[o];
    double m2 = 0.0, m2_outer = 0.0, mass = 0.0, wv = 0.0;
    for (std::size_t iy = 0; iy < g.n(); ++iy)
        for (std::size_t ix = 0; ix < g.n(); ++ix) {
            const std::size_t e = g.index(ix, iy);
            const double x = g.coord(ix), y = g.coord(iy), r2 = x * x + y * y;
            f.entropy += da * detail::w_log_w(w[e]);
            m2 += da * w[e] * r2;
            if (std::max(std::fabs(x), std::fabs(y)) > 0.95 * g.half_width()) m2_outer += da * w[e] * r2;
            wv += da * w[e] * V[e];
            mass += da * w[e];
        }
    if (m2 > 0.0) detail::require_second_moment(m2_outer / m2);
    f.confinement = 0.25 * m2;
    f.interaction = -0.5 * (wv - f.gauge_constant * mass);
    f.value = f.entropy + f.confinement + f.interaction;
    f.absolute = f.value - 0.5 * f.gauge_constant * mass;
    return f;
}

}  // namespace pks
