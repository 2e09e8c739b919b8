#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace pks {

/// Truncated power series c_0 + c_1 r + ... + c_K r^K (Taylor-mode arithmetic).
template <std::size_t K>
struct Series {
    std::array<double, K + 1> c{};

    static Series constant(double v) {
        Series s;
        s.c[0] = v;
        return s;
    }
    static Series variable(double v = 0.0) {
        Series s;
        s.c[0] = v;
        if constexpr (K >= 1) s.c[1] = 1.0;
        return s;
    }

    double operator[](std::size_t k) const { return c[k]; }

    friend Series operator+(Series a, const Series& b) {
        for (std::size_t k = 0; k <= K; ++k) a.c[k] += b.c[k];
        return a;
    }
    friend Series operator-(Series a, const Series& b) {
        for (std::size_t k = 0; k <= K; ++k) a.c[k] -= b.c[k];
        return a;
    }
    friend Series operator*(double s, Series a) {
        for (double& x : a.c) x *= s;
        return a;
    }
    friend Series operator+(double s, Series a) {
        a.c[0] += s;
        return a;
    }
    friend Series operator*(const Series& a, const Series& b) {
        Series out;
        for (std::size_t i = 0; i <= K; ++i)
            for (std::size_t j = 0; i + j <= K; ++j) out.c[i + j] += a.c[i] * b.c[j];
        return out;
    }
    friend Series operator/(const Series& a, const Series& b) {
        Series q;
        for (std::size_t k = 0; k <= K; ++k) {
            double s = a.c[k];
            for (std::size_t j = 1; j <= k; ++j) s -= b.c[j] * q.c[k - j];
            q.c[k] = s / b.c[0];
        }
        return q;
    }
};

template <std::size_t K>
Series<K> exp(const Series<K>& f) {
    Series<K> g;
    g.c[0] = std::exp(f.c[0]);
    for (std::size_t k = 1; k <= K; ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * f.c[j] * g.c[k - j];
        g.c[k] = s / static_cast<double>(k);
    }
    return g;
}

/// f^alpha for f(0) > 0.
template <std::size_t K>
Series<K> pow(const Series<K>& f, double alpha) {
    Series<K> g;
    g.c[0] = std::pow(f.c[0], alpha);
    for (std::size_t k = 1; k <= K; ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j <= k; ++j)
            s += (alpha * static_cast<double>(j) - static_cast<double>(k - j)) * f.c[j] * g.c[k - j];
        g.c[k] = s / (static_cast<double>(k) * f.c[0]);
    }
    return g;
}

}  // namespace pks
