#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pks/error.hpp"

namespace pks {

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least squares line through (x_i, y_i).
inline RateFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0, ErrorCode::InvalidData, "fit needs at least two distinct abscissae");
    RateFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

/// Power-law fit err ~ C t^slope on log-log axes.
inline RateFit fit_rate(const std::vector<double>& times, const std::vector<double>& errors) {
    require(times.size() == errors.size(), ErrorCode::InvalidData, "fit_rate needs matching lengths");
    require(times.size() >= 8, ErrorCode::InvalidData, "fit_rate needs at least 8 samples");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < times.size(); ++i) {
        require(times[i] > 0.0 && errors[i] > 0.0 && std::isfinite(times[i]) && std::isfinite(errors[i]),
                ErrorCode::InvalidData, "fit_rate needs positive finite samples");
        lx.push_back(std::log(times[i]));
        ly.push_back(std::log(errors[i]));
    }
    return fit_line(lx, ly);
}

/// Exponential fit err ~ C e^{-rate x}; returns rate as the slope.
inline RateFit fit_exponential(const std::vector<double>& x, const std::vector<double>& errors) {
    require(x.size() == errors.size() && x.size() >= 3, ErrorCode::InvalidData, "fit needs >= 3 samples");
    std::vector<double> ly;
    for (double e : errors) {
        require(e > 0.0 && std::isfinite(e), ErrorCode::InvalidData, "fit needs positive finite samples");
        ly.push_back(std::log(e));
    }
    auto f = fit_line(x, ly);
    f.slope = -f.slope;
    return f;
}

}  // namespace pks
