#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "pks/error.hpp"
#include "pks/math.hpp"

namespace pks {

enum class GridKind { uniform, graded };

inline std::string to_string(GridKind kind) { return kind == GridKind::uniform ? "uniform" : "graded"; }

/// Radial nodes on [0, r_max] with the trapezoid quadrature for the measure
/// |S^{n-1}| r^{n-1} dr. A graded grid places r = r_max s^2 on uniform s and
/// applies the trapezoid rule in s, so weights resolve the origin and still
/// integrate the constant 1 over [0, r_max] exactly.
class RadialGrid {
public:
    RadialGrid(int dim, std::size_t size, double r_max, GridKind kind) : dim_(dim), kind_(kind), r_max_(r_max) {
        require_dim(dim);
        require(size >= 8, ErrorCode::InvalidParameter, "radial grid needs at least 8 nodes");
        require(r_max > 0.0 && std::isfinite(r_max), ErrorCode::InvalidParameter, "r_max must be positive");
        const double hs = 1.0 / static_cast<double>(size - 1);
        const double area = sphere_area(dim);
        nodes_.resize(size);
        line_weights_.resize(size);
        volume_density_.resize(size);
        volumes_.resize(size);
        for (std::size_t i = 0; i < size; ++i) {
            const double s = static_cast<double>(i) * hs;
            const double r = kind == GridKind::uniform ? r_max * s : r_max * s * s;
            const double drds = kind == GridKind::uniform ? r_max : 2.0 * r_max * s;
            const double end = (i == 0 || i + 1 == size) ? 0.5 : 1.0;
            nodes_[i] = r;
            line_weights_[i] = end * hs * drds;
            volume_density_[i] = area * std::pow(r, dim - 1) * drds;
            volumes_[i] = end * hs * volume_density_[i];
        }
        nodes_.back() = r_max;
        step_ = hs;
    }

    int dim() const { return dim_; }
    GridKind kind() const { return kind_; }
    std::size_t size() const { return nodes_.size(); }
    double r_max() const { return r_max_; }
    double node(std::size_t i) const { return nodes_[i]; }
    const std::vector<double>& nodes() const { return nodes_; }
    /// Trapezoid weights for plain dr.
    const std::vector<double>& line_weights() const { return line_weights_; }
    /// Weights for the volume element |S^{n-1}| r^{n-1} dr.
    const std::vector<double>& volumes() const { return volumes_; }

    /// Cumulative volume integral of f from 0 to each node: trapezoid in s with
    /// the leading Euler-Maclaurin term removed. At r_max this equals the plain
    /// weighted sum whenever f has decayed there.
    std::vector<double> cumulative(const std::vector<double>& f) const {
        const std::size_t m = size();
        std::vector<double> g(m);
        for (std::size_t i = 0; i < m; ++i) g[i] = volume_density_[i] * f[i];
        const auto dg = parameter_derivative(g);
        std::vector<double> out(m, 0.0);
        // The first cells see r^{n-1} f ~ s^{2n-1}, far from the trapezoid's
        // comfort zone; integrate an even quartic through nodes 0, 2, 4 there.
        constexpr std::size_t head = 4;
        const double r2 = nodes_[2] * nodes_[2], r4 = nodes_[4] * nodes_[4];
        const double c0 = f[0];
        const double d2 = (f[2] - c0) / r2, d4 = (f[4] - c0) / r4;
        const double c2 = (d4 - d2) / (r4 - r2);
        const double c1 = d2 - c2 * r2;
        const double area = sphere_area(dim_);
        for (std::size_t i = 1; i <= head; ++i) {
            const double r = nodes_[i];
            out[i] = area * std::pow(r, dim_) * (c0 / dim_ + c1 * r * r / (dim_ + 2) + c2 * std::pow(r, 4) / (dim_ + 4));
        }
        double trap = 0.0;
        for (std::size_t i = head + 1; i < m; ++i) {
            trap += 0.5 * step_ * (g[i - 1] + g[i]);
            out[i] = out[head] + trap - step_ * step_ / 12.0 * (dg[i] - dg[head]);
        }
        return out;
    }

    /// Cumulative plain integral int_0^{r_i} f dr with the same correction.
    std::vector<double> cumulative_line(const std::vector<double>& f) const {
        const std::size_t m = size();
        std::vector<double> g(m);
        for (std::size_t i = 0; i < m; ++i) g[i] = f[i] * jacobian(i);
        const auto dg = parameter_derivative(g);
        std::vector<double> out(m, 0.0);
        double trap = 0.0;
        for (std::size_t i = 1; i < m; ++i) {
            trap += 0.5 * step_ * (g[i - 1] + g[i]);
            out[i] = trap - step_ * step_ / 12.0 * (dg[i] - dg[0]);
        }
        return out;
    }

    /// dr/ds at node i.
    double jacobian(std::size_t i) const {
        return kind_ == GridKind::uniform ? r_max_ : 2.0 * r_max_ * static_cast<double>(i) * step_;
    }

    /// Same grid layout in a different dimension.
    std::shared_ptr<const RadialGrid> with_dim(int dim) const {
        return std::make_shared<const RadialGrid>(dim, size(), r_max_, kind_);
    }

private:
    /// Fourth-order d/ds on the uniform parameter grid.
    std::vector<double> parameter_derivative(const std::vector<double>& g) const {
        const std::size_t m = g.size();
        const double h = step_;
        const std::size_t e = m - 1;
        std::vector<double> dg(m);
        for (std::size_t i = 2; i + 2 < m; ++i) dg[i] = (-g[i + 2] + 8.0 * g[i + 1] - 8.0 * g[i - 1] + g[i - 2]) / (12.0 * h);
        if (kind_ == GridKind::graded) {
            // g(s) = f(r(s)) dr/ds carries the factor s, so it is odd in s.
            dg[0] = (16.0 * g[1] - 2.0 * g[2]) / (12.0 * h);
            dg[1] = (-g[3] + 8.0 * g[2] - 8.0 * g[0] - g[1]) / (12.0 * h);
        } else {
            dg[0] = (-25.0 * g[0] + 48.0 * g[1] - 36.0 * g[2] + 16.0 * g[3] - 3.0 * g[4]) / (12.0 * h);
            dg[1] = (-3.0 * g[0] - 10.0 * g[1] + 18.0 * g[2] - 6.0 * g[3] + g[4]) / (12.0 * h);
        }
        dg[e] = (25.0 * g[e] - 48.0 * g[e - 1] + 36.0 * g[e - 2] - 16.0 * g[e - 3] + 3.0 * g[e - 4]) / (12.0 * h);
        dg[e - 1] = (3.0 * g[e] + 10.0 * g[e - 1] - 18.0 * g[e - 2] + 6.0 * g[e - 3] - g[e - 4]) / (12.0 * h);
        return dg;
    }

    int dim_;
    GridKind kind_;
    double r_max_;
    double step_ = 0.0;
    std::vector<double> nodes_;
    std::vector<double> line_weights_;
    std::vector<double> volume_density_;
    std::vector<double> volumes_;
};

using RadialGridPtr = std::shared_ptr<const RadialGrid>;

inline RadialGridPtr make_radial_grid(int dim, std::size_t size = 4096, double r_max = 40.0,
                                      GridKind kind = GridKind::graded) {
    return std::make_shared<const RadialGrid>(dim, size, r_max, kind);
}

/// Uniform N x N cell-centred-free grid on [-L, L)^2; samples at x_j = -L + j h.
class CartesianGrid2D {
public:
    CartesianGrid2D(std::size_t n, double half_width) : n_(n), half_width_(half_width) {
        require(n >= 8 && (n & (n - 1)) == 0, ErrorCode::InvalidParameter,
                "Cartesian grid size must be a power of two, got " + std::to_string(n));
        require(half_width > 0.0 && std::isfinite(half_width), ErrorCode::InvalidParameter,
                "half width must be positive");
        h_ = 2.0 * half_width / static_cast<double>(n);
    }

    std::size_t n() const { return n_; }
    std::size_t size() const { return n_ * n_; }
    double half_width() const { return half_width_; }
    double spacing() const { return h_; }
    double cell_area() const { return h_ * h_; }
    double coord(std::size_t j) const { return -half_width_ + static_cast<double>(j) * h_; }
    std::size_t index(std::size_t ix, std::size_t iy) const { return iy * n_ + ix; }

private:
    std::size_t n_;
    double half_width_;
    double h_;
};

using CartesianGridPtr = std::shared_ptr<const CartesianGrid2D>;

inline CartesianGridPtr make_cartesian_grid(std::size_t n = 256, double half_width = 20.0) {
    return std::make_shared<const CartesianGrid2D>(n, half_width);
}

}  // namespace pks
