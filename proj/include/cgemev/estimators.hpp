#pragma once

#include "cgemev/spectral.hpp"
#include "cgemev/toeplitz.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace cgemev {

/// Compact search intervals B x Theta, both bounded away from 0.
struct SearchBox {
    double b_lo = 0.0, b_hi = 0.0;
    double theta_lo = 0.0, theta_hi = 0.0;
    int scan_points = 64;     // coarse log-spaced scan for the root solve
    int grid_points = 16;     // per-axis log-spaced grid for the ML search
    double root_xtol = 1e-10; // on log(theta)

    void validate() const;
    static SearchBox around(double b0, double theta0, double factor = 100.0);
};

struct EstimateResult {
    double b_hat = std::numeric_limits<double>::quiet_NaN();
    double theta_hat = std::numeric_limits<double>::quiet_NaN();
    double c_hat = std::numeric_limits<double>::quiet_NaN();
    std::string method;
    bool converged = false;
    int iterations = 0;
    bool boundary_hit = false;
    bool multiple_roots = false;
    bool ev_negative = false;
    std::uint64_t seed = 0;
};

/// Per-candidate diagnostics emitted by the root solve (CLI --dump-diagnostics).
struct CgemDiagnostic {
    double theta = 0, trace_a = 0, quad_form = 0, statistic = 0;
};

/// b_EV = n^{-1} y^T y - 1. May be negative (flagged, not clamped).
double ev_variance(const Eigen::VectorXd& y, bool* negative = nullptr);

/// c = b theta^{2 nu}.
double microergodic(double b, double theta, double nu);

/// Local squared-difference nugget estimate (1/(2(n-1))) sum (y_i - y_{i-1})^2.
double nugget_variance_estimate(const Eigen::VectorXd& y);

/// Root of the CGEM-EV estimating equation in theta with b held fixed.
EstimateResult solve_cgem(double b, const Eigen::VectorXd& y, double nu, double delta,
                          const SearchBox& box, std::vector<CgemDiagnostic>* diag = nullptr);

/// Full CGEM-EV: b_hat = b_EV, theta_hat the CGEM root at b_hat.
EstimateResult cgemev_estimate(const Eigen::VectorXd& y, double nu, double delta,
                               const SearchBox& box);

/// Exact Gaussian ML over B x Theta (coarse grid + Nelder-Mead refinement).
EstimateResult ml_estimate(const Eigen::VectorXd& y, double nu, double delta,
                           const SearchBox& box);

/// 1-D ML in theta with b fixed at b0 (theta_ML0).
EstimateResult ml_fixed_b(const Eigen::VectorXd& y, double b0, double nu, double delta,
                          const SearchBox& box);

/// 1-D ML in b with the microergodic constant fixed at c0 (b_ML^0);
/// theta is reparameterized as (c0/b)^{1/(2 nu)}.
EstimateResult ml_fixed_c(const Eigen::VectorXd& y, double c0, double nu, double delta,
                          const SearchBox& box);

/// Hybrid: 1-D ML in theta with b fixed at b_EV (theta_H).
EstimateResult hybrid_estimate(const Eigen::VectorXd& y, double nu, double delta,
                               const SearchBox& box);

} // namespace cgemev
