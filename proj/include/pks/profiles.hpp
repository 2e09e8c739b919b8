#pragma once

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "pks/interpolation.hpp"
#include "pks/potential.hpp"

namespace pks {

struct ProfileResult {
    RadialField field;
    double mass = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct ProfileOptions {
    double tolerance = 1e-13;  // L1 size of the last update, relative to M
    double relaxation = 0.5;
    int max_iter = 500;
};

inline RadialField gaussian_profile(int n, double mass, const RadialGridPtr& grid) {
    require_dim(n);
    require(grid->dim() == n, ErrorCode::InvalidParameter, "grid dimension does not match n");
    require(mass >= 0.0 && std::isfinite(mass), ErrorCode::InvalidParameter, "mass must be nonnegative");
    return sample_radial(grid, [&](double r) { return mass * gaussian_density(n, r); });
}

/// V_n' for V_n = E_n * G_n, obtained from the Gauss law on the grid.
inline RadialField gaussian_potential(int n, const RadialGridPtr& grid) {
    const auto g = radial_gradient(gaussian_profile(n, 1.0, grid));
    return RadialField(grid, g.values);
}

/// Residual of Delta U + U + xi.grad U / 2 - div(U grad E_2 * U) for radial 2D U,
/// in L^2(G_2^{-1}) over |xi| <= 20.
inline double stationary_residual(const RadialField& u) {
    require(u.dim() == 2, ErrorCode::InvalidParameter, "stationary residual is defined for n = 2");
    const auto& grid = u.grid();
    std::vector<double> d1, d2;
    radial_derivatives(grid, u.values(), d1, d2);
    const auto dv = radial_gradient(u).values;
    const auto& w = grid.volumes();
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double r = grid.node(i);
        if (r > 20.0) break;
        // div(U grad V) = U' V' + U Delta V = U' V' - U^2
        const double lap = i == 0 ? 2.0 * d2[0] : d2[i] + d1[i] / r;
        const double res = lap + u[i] + 0.5 * r * d1[i] - d1[i] * dv[i] + u[i] * u[i];
        acc += w[i] * res * res / gaussian_density(2, r);
    }
    return std::sqrt(acc);
}

/// G_M from the first integral U = A exp(-r^2/4 + V), V = E_2 * U with V(0) = 0,
/// A fixed by the mass; damped Picard iteration.
inline ProfileResult self_similar_profile_2d(double mass, const RadialGridPtr& grid, const ProfileOptions& opt = {}) {
    require(grid->dim() == 2, ErrorCode::InvalidParameter, "G_M lives on a 2D radial grid");
    require(mass >= 0.0 && std::isfinite(mass), ErrorCode::InvalidParameter, "mass must be nonnegative");
    require(mass < 8.0 * pi, ErrorCode::SupercriticalMass, "no self-similar profile for M >= 8 pi");
    ProfileResult out;
    out.mass = mass;
    if (mass == 0.0) {
        out.field = RadialField(grid);
        out.converged = true;
        return out;
    }
    RadialField u = gaussian_profile(2, mass, grid);
    const auto& r = grid->nodes();
    std::vector<double> next(u.size());
    for (int it = 1; it <= opt.max_iter; ++it) {
        const auto V = radial_potential(u);
        for (std::size_t i = 0; i < u.size(); ++i) next[i] = std::exp(-0.25 * r[i] * r[i] + V[i]);
        RadialField shape(grid, next);
        const double scale = mass / total_mass(shape);
        double change = 0.0;
        const auto& w = grid->volumes();
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double target = scale * next[i];
            const double updated = (1.0 - opt.relaxation) * u[i] + opt.relaxation * target;
            change += w[i] * std::fabs(updated - u[i]);
            u[i] = updated;
        }
        out.iterations = it;
        if (!std::isfinite(change)) break;
        if (change <= opt.tolerance * mass) {
            out.converged = true;
            break;
        }
    }
    require(out.converged, ErrorCode::FixedPointStalled,
            "G_M iteration did not converge in " + std::to_string(opt.max_iter) + " iterations for M = " +
                std::to_string(mass));
    out.field = u;
    out.residual = stationary_residual(u);
    return out;
}

inline nlohmann::json profile_json(const ProfileResult& p) {
    return {{"M", p.mass}, {"residual", p.residual}, {"iterations", p.iterations}, {"converged", p.converged}};
}

}  // namespace pks
