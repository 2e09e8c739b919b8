#pragma once

#include <algorithm>
#include <array>
#include <concepts>
#include <string>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "pks/error.hpp"
#include "pks/grid.hpp"
#include "pks/interpolation.hpp"
#include "pks/math.hpp"

namespace pks {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// Negative samples smaller than this fraction of the sup norm are treated as
/// round-off and clamped to zero.
inline constexpr double default_clamp_tolerance = 1e-12;

namespace detail {
inline void require_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        require(std::isfinite(x), ErrorCode::InvalidField, std::string(what) + " has a non-finite sample");
}
}  // namespace detail

/// Radially symmetric samples u(r_i) on a RadialGrid.
class RadialField {
public:
    RadialField() = default;
    RadialField(RadialGridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
        require(grid_ != nullptr, ErrorCode::InvalidField, "radial field without grid");
        require(values_.size() == grid_->size(), ErrorCode::InvalidField, "radial field size mismatch");
        detail::require_finite(values_, "radial field");
    }
    explicit RadialField(RadialGridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}

    int dim() const { return grid_->dim(); }
    const RadialGrid& grid() const { return *grid_; }
    const RadialGridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

private:
    RadialGridPtr grid_;
    std::vector<double> values_;
};

/// Samples of a planar density on the uniform grid, row-major (y slow, x fast).
class CartesianField2D {
public:
    CartesianField2D() = default;
    CartesianField2D(CartesianGridPtr grid, std::vector<double> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        require(grid_ != nullptr, ErrorCode::InvalidField, "cartesian field without grid");
        require(values_.size() == grid_->size(), ErrorCode::InvalidField, "cartesian field size mismatch");
        detail::require_finite(values_, "cartesian field");
    }
    explicit CartesianField2D(CartesianGridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}

    static constexpr int dim() { return 2; }
    const CartesianGrid2D& grid() const { return *grid_; }
    const CartesianGridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double at(std::size_t ix, std::size_t iy) const { return values_[grid_->index(ix, iy)]; }

private:
    CartesianGridPtr grid_;
    std::vector<double> values_;
};

template <typename Field>
concept DensityField = std::same_as<Field, RadialField> || std::same_as<Field, CartesianField2D>;

struct MomentSet {
    double mass = 0.0;
    std::vector<double> center;
    double second_moment = 0.0;
};

template <typename Field>
struct SimilarityState {
    Field field;
    double tau = 0.0;
    int dim = 2;
};

inline RadialField sample_radial(const RadialGridPtr& grid, const std::function<double(double)>& fn) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid->node(i));
    return RadialField(grid, std::move(v));
}

inline CartesianField2D sample_cartesian(const CartesianGridPtr& grid,
                                         const std::function<double(double, double)>& fn) {
    const std::size_t n = grid->n();
    std::vector<double> v(grid->size());
    for (std::size_t iy = 0; iy < n; ++iy)
        for (std::size_t ix = 0; ix < n; ++ix) v[grid->index(ix, iy)] = fn(grid->coord(ix), grid->coord(iy));
    return CartesianField2D(grid, std::move(v));
}

inline double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

/// Clamp ringing-level negatives to zero; anything more negative is an error.
template <DensityField Field>
void enforce_density(Field& f, double clamp_tolerance = default_clamp_tolerance) {
    auto& v = f.values();
    const double limit = clamp_tolerance * sup_norm(v);
    for (double& x : v) {
        require(std::isfinite(x), ErrorCode::InvalidField, "density has a non-finite sample");
        if (x < 0.0) {
            require(-x <= limit, ErrorCode::InvalidField,
                    "density has a negative sample " + std::to_string(x) + " beyond the clamp tolerance");
            x = 0.0;
        }
    }
}

template <DensityField Field>
bool is_nonnegative(const Field& f) {
    return std::all_of(f.values().begin(), f.values().end(), [](double x) { return x >= 0.0; });
}

// ---------------------------------------------------------------- quadrature

inline double integrate(const RadialField& f) {
    const auto& w = f.grid().volumes();
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
    return s;
}

inline double integrate(const CartesianField2D& f) {
    double s = 0.0;
    for (double x : f.values()) s += x;
    return s * f.grid().cell_area();
}

template <DensityField Field>
double total_mass(const Field& f) {
    detail::require_finite(f.values(), "field");
    return integrate(f);
}

/// L^p norm by quadrature; p = infinity gives the largest sample magnitude.
template <DensityField Field>
double lp_norm(const Field& f, double p) {
    require(p >= 1.0, ErrorCode::InvalidParameter, "lp_norm needs p >= 1");
    if (std::isinf(p)) return sup_norm(f.values());
    Field g = f;
    for (double& x : g.values()) x = std::pow(std::fabs(x), p);
    return std::pow(integrate(g), 1.0 / p);
}

template <DensityField Field>
Field abs_difference(const Field& a, const Field& b) {
    Field d = a;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::fabs(a[i] - b[i]);
    return d;
}

template <DensityField Field>
double l1_distance(const Field& a, const Field& b) {
    return integrate(abs_difference(a, b));
}

inline MomentSet moments(const RadialField& f) {
    MomentSet m;
    m.center.assign(static_cast<std::size_t>(f.dim()), 0.0);
    const auto& w = f.grid().volumes();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double r = f.grid().node(i);
        m.mass += w[i] * f[i];
        m.second_moment += w[i] * f[i] * r * r;
    }
    return m;
}

inline MomentSet moments(const CartesianField2D& f) {
    MomentSet m;
    m.center.assign(2, 0.0);
    const auto& g = f.grid();
    const double da = g.cell_area();
    for (std::size_t iy = 0; iy < g.n(); ++iy) {
        const double y = g.coord(iy);
        for (std::size_t ix = 0; ix < g.n(); ++ix) {
            const double x = g.coord(ix);
            const double u = f.at(ix, iy) * da;
            m.mass += u;
            m.center[0] += u * x;
            m.center[1] += u * y;
            m.second_moment += u * (x * x + y * y);
        }
    }
    return m;
}

// ------------------------------------------------------- similarity variables

/// Rescale to similarity variables on the same grid: U(xi) = t^{n/2} u(sqrt(t) xi).
inline RadialField rescale(const RadialField& u, double amplitude, double stretch) {
    std::vector<double> v(u.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = amplitude * interpolate_radial(u.grid(), u.values(), stretch * u.grid().node(i));
    return RadialField(u.grid_ptr(), std::move(v));
}

inline CartesianField2D rescale(const CartesianField2D& u, double amplitude, double stretch) {
    const auto& g = u.grid();
    const std::size_t n = g.n();
    // Separable: interpolate along x for every row, then along y.
    std::vector<std::array<std::pair<std::size_t, double>, 6>> stencil(n);
    std::vector<char> inside(n);
    for (std::size_t j = 0; j < n; ++j) {
        bool in = false;
        stencil[j] = cartesian_axis_stencil(g, stretch * g.coord(j), in);
        inside[j] = in;
    }
    std::vector<double> tmp(g.size(), 0.0), out(g.size(), 0.0);
    for (std::size_t iy = 0; iy < n; ++iy)
        for (std::size_t ix = 0; ix < n; ++ix) {
            if (!inside[ix]) continue;
            double s = 0.0;
            for (const auto& [k, w] : stencil[ix]) s += w * u.at(k, iy);
            tmp[g.index(ix, iy)] = s;
        }
    for (std::size_t iy = 0; iy < n; ++iy) {
        if (!inside[iy]) continue;
        for (std::size_t ix = 0; ix < n; ++ix) {
            double s = 0.0;
            for (const auto& [k, w] : stencil[iy]) s += w * tmp[g.index(ix, k)];
            out[g.index(ix, iy)] = amplitude * s;
        }
    }
    return CartesianField2D(u.grid_ptr(), std::move(out));
}

template <DensityField Field>
SimilarityState<Field> to_similarity(const Field& u, double t) {
    require(t > 0.0 && std::isfinite(t), ErrorCode::InvalidParameter, "to_similarity needs t > 0");
    const int n = u.dim();
    return {rescale(u, std::pow(t, 0.5 * n), std::sqrt(t)), std::log(t), n};
}

template <DensityField Field>
std::pair<Field, double> from_similarity(const SimilarityState<Field>& state) {
    require(std::isfinite(state.tau), ErrorCode::InvalidParameter, "similarity time must be finite");
    const double t = std::exp(state.tau);
    const int n = state.field.dim();
    return {rescale(state.field, std::pow(t, -0.5 * n), 1.0 / std::sqrt(t)), t};
}

}  // namespace pks
