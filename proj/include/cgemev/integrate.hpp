#pragma once

#include <functional>
#include <vector>

namespace cgemev {

struct IntegrateOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-12;
    int max_panels = 20000;
    std::vector<double> breakpoints; // interior seed points, unsorted ok
};

struct IntegralResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int panels = 0;
};

/// Globally adaptive panel integration of f over [a, b]. Each panel is scored
/// with a 15-point Gauss rule against a 7-point rule; the worst panel is
/// bisected until sum(err) <= max(abs_tol, rel_tol*|I|).
/// Throws QuadratureFailure when the panel budget runs out first.
IntegralResult adaptive_integrate(const std::function<double(double)>& f,
                                  double a, double b,
                                  const IntegrateOptions& opts = {});

} // namespace cgemev
