#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pks/grid.hpp"
#include "pks/math.hpp"
#include "pks/special.hpp"

namespace pks {

/// Banded quadrature matrix of the Gaussian kernel
///   g(r) = (4 pi a)^{-n/2} \int f(eta) exp(-|x - eta / c|^2 / (4a)) d eta
/// on a radial grid, after the angular integral has been done in closed form.
/// Columns are rescaled so that every source node carries exactly its own mass,
/// which makes the discrete operator mass preserving.
class RadialGaussianKernel {
public:
    RadialGaussianKernel(const RadialGrid& grid, double a, double c) : a_(a), c_(c) {
        require(a > 0.0 && std::isfinite(a), ErrorCode::InvalidParameter, "kernel variance must be positive");
        require(c >= 1.0 && std::isfinite(c), ErrorCode::InvalidParameter, "kernel dilation must be >= 1");
        const int n = grid.dim();
        const std::size_t m = grid.size();
        const auto& r = grid.nodes();
        const auto& w = grid.volumes();
        const double pref = std::pow(4.0 * pi * a, -0.5 * n);
        const double reach = 20.0 * std::sqrt(a);

        std::vector<double> src(m);
        for (std::size_t j = 0; j < m; ++j) src[j] = r[j] / c;

        row_begin_.assign(m, 0);
        row_start_.assign(m + 1, 0);
        std::vector<double> colsum(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const auto lo = std::lower_bound(src.begin(), src.end(), r[i] - reach) - src.begin();
            const auto hi = std::upper_bound(src.begin(), src.end(), r[i] + reach) - src.begin();
            row_begin_[i] = static_cast<std::size_t>(lo);
            for (auto j = lo; j < hi; ++j) {
                const double d = r[i] - src[static_cast<std::size_t>(j)];
                const double z = r[i] * src[static_cast<std::size_t>(j)] / (2.0 * a);
                const double k = pref * std::exp(-d * d / (4.0 * a)) * sphere_average_scaled(n, z);
                values_.push_back(k);
                colsum[static_cast<std::size_t>(j)] += w[i] * k;
            }
            row_start_[i + 1] = values_.size();
        }
        // Each column integrates to 1 exactly in the continuum; enforce it discretely.
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t e = row_start_[i]; e < row_start_[i + 1]; ++e) {
                const std::size_t j = row_begin_[i] + (e - row_start_[i]);
                if (colsum[j] > 0.0) values_[e] /= colsum[j];
            }
        weights_ = w;
    }

    double variance() const { return a_; }
    double dilation() const { return c_; }

    std::vector<double> apply(const std::vector<double>& f) const {
        const std::size_t m = row_begin_.size();
        std::vector<double> wf(m);
        for (std::size_t j = 0; j < m; ++j) wf[j] = weights_[j] * f[j];
        std::vector<double> out(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            const double* kv = values_.data() + row_start_[i];
            const double* x = wf.data() + row_begin_[i];
            const std::size_t len = row_start_[i + 1] - row_start_[i];
            for (std::size_t e = 0; e < len; ++e) s += kv[e] * x[e];
            out[i] = s;
        }
        return out;
    }

private:
    double a_;
    double c_;
    std::vector<std::size_t> row_begin_;
    std::vector<std::size_t> row_start_;
    std::vector<double> values_;
    std::vector<double> weights_;
};

}  // namespace pks
