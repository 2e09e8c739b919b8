#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pks/grid.hpp"

namespace pks {

/// Fornberg's recursion: weights c[k][j] such that f^(k)(x0) ~ sum_j c[k][j] f(x_j).
inline std::vector<std::vector<double>> fornberg_weights(double x0, std::span<const double> x, int max_order) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> c(static_cast<std::size_t>(max_order + 1), std::vector<double>(n, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const int mn = std::min<int>(static_cast<int>(i), max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

namespace detail {

/// Node positions/values of an even radial function around index `center`,
/// reflecting through r = 0 where the stencil would leave the grid.
struct EvenStencil {
    std::array<double, 8> x{};
    std::array<std::size_t, 8> idx{};
    std::size_t count = 0;
};

inline EvenStencil even_stencil(const RadialGrid& grid, long first, std::size_t width) {
    EvenStencil st;
    const long last_valid = static_cast<long>(grid.size()) - 1;
    first = std::min(first, last_valid - static_cast<long>(width) + 1);
    for (std::size_t k = 0; k < width; ++k) {
        const long j = first + static_cast<long>(k);
        const std::size_t a = static_cast<std::size_t>(std::labs(j));
        st.x[k] = j < 0 ? -grid.node(a) : grid.node(a);
        st.idx[k] = a;
    }
    st.count = width;
    return st;
}

}  // namespace detail

/// Sixth-order first and second radial derivatives of an even radial function.
inline void radial_derivatives(const RadialGrid& grid, std::span<const double> f, std::vector<double>& d1,
                               std::vector<double>& d2) {
    constexpr std::size_t width = 7;
    const std::size_t n = grid.size();
    d1.assign(n, 0.0);
    d2.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto st = detail::even_stencil(grid, static_cast<long>(i) - 3, width);
        const auto w = fornberg_weights(grid.node(i), std::span<const double>(st.x.data(), st.count), 2);
        double a = 0.0, b = 0.0;
        for (std::size_t k = 0; k < st.count; ++k) {
            a += w[1][k] * f[st.idx[k]];
            b += w[2][k] * f[st.idx[k]];
        }
        d1[i] = a;
        d2[i] = b;
    }
    d1[0] = 0.0;
}

/// Sixth-point Lagrange interpolation of an even radial function; zero beyond r_max.
inline double interpolate_radial(const RadialGrid& grid, std::span<const double> f, double r) {
    r = std::fabs(r);
    if (r > grid.r_max()) return 0.0;
    const auto& nodes = grid.nodes();
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
    const long hi = static_cast<long>(it - nodes.begin());
    if (hi > 0 && nodes[static_cast<std::size_t>(hi - 1)] == r) return f[static_cast<std::size_t>(hi - 1)];
    constexpr std::size_t width = 6;
    const auto st = detail::even_stencil(grid, hi - 3, width);
    double sum = 0.0;
    for (std::size_t k = 0; k < st.count; ++k) {
        double l = 1.0;
        for (std::size_t m = 0; m < st.count; ++m)
            if (m != k) l *= (r - st.x[m]) / (st.x[k] - st.x[m]);
        sum += l * f[st.idx[k]];
    }
    return sum;
}

/// Six-point Lagrange interpolation on the uniform Cartesian axis; zero outside.
inline std::array<std::pair<std::size_t, double>, 6> cartesian_axis_stencil(const CartesianGrid2D& grid, double x,
                                                                           bool& inside) {
    std::array<std::pair<std::size_t, double>, 6> out{};
    const double h = grid.spacing();
    const double u = (x + grid.half_width()) / h;
    const long n = static_cast<long>(grid.n());
    inside = u >= 0.0 && u <= static_cast<double>(n - 1);
    if (!inside) return out;
    long first = static_cast<long>(std::floor(u)) - 2;
    first = std::clamp(first, 0L, n - 6);
    for (std::size_t k = 0; k < 6; ++k) {
        const double xk = static_cast<double>(first + static_cast<long>(k));
        double l = 1.0;
        for (std::size_t m = 0; m < 6; ++m) {
            if (m == k) continue;
            const double xm = static_cast<double>(first + static_cast<long>(m));
            l *= (u - xm) / (xk - xm);
        }
        out[k] = {static_cast<std::size_t>(first + static_cast<long>(k)), l};
    }
    return out;
}

}  // namespace pks
