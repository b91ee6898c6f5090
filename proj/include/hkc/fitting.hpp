#pragma once

// Ordinary least-squares line fits used by the scans.

#include "hkc/errors.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace hkc {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_line: need at least two (x, y) pairs");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw DomainError("fit_line: x values are all equal");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

// Fit of log(values) against 1/eps; a negative slope means decay like exp(slope / eps).
inline LineFit fit_exponential_decay(const std::vector<double>& eps, const std::vector<double>& values) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0) || !(values[i] > 0.0)) throw DomainError("fit_exponential_decay: need positive data");
        x.push_back(1.0 / eps[i]);
        y.push_back(std::log(values[i]));
    }
    return fit_line(x, y);
}

}  // namespace hkc
