#pragma once

#include "cgemev/errors.hpp"

#include <cmath>

namespace cgemev {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Regularity index of the Matern family, nu >= 1/2.
struct MaternOrder {
    double nu;
    explicit MaternOrder(double nu_) : nu(nu_) {
        if (!(nu >= 0.5) || !std::isfinite(nu))
            throw Error("MaternOrder: nu must be >= 1/2");
    }
};

/// Candidate Matern-plus-nugget model on a regular grid with step delta.
/// All aliased quantities depend on (delta, theta) only through alpha = delta*theta.
struct ModelParams {
    double nu;
    double b;     // signal variance, in noise-variance units
    double theta; // inverse range, 1/time
    double delta; // grid step, time

    ModelParams(double nu_, double b_, double theta_, double delta_)
        : nu(nu_), b(b_), theta(theta_), delta(delta_) {
        MaternOrder check(nu);
        if (!(b > 0.0) || !(theta > 0.0) || !(delta > 0.0))
            throw Error("ModelParams: b, theta, delta must all be > 0");
    }

    double alpha() const { return delta * theta; }
    double microergodic() const { return b * std::pow(theta, 2.0 * nu); }
};

/// Truncation control for the aliasing sum. tol is an absolute error budget on
/// the returned density value; k_max caps the explicit summation half-width.
struct AliasingControl {
    double tol = 1e-10;
    long k_max = 1000000;
};

/// C_nu = Gamma(nu+1/2) / (sqrt(pi) Gamma(nu)), normalizing int g* = 1.
double matern_constant(double nu);

/// g*_{nu,theta}(omega) = C_nu theta^{2nu} / (theta^2 + omega^2)^{nu+1/2}.
double spectral_density_unaliased(double nu, double theta, double omega);

/// Matern correlation K_{nu,theta}(t), the cosine transform of g*.
/// Closed forms at nu in {1/2, 3/2, 5/2}; adaptive quadrature otherwise.
double covariance(double nu, double theta, double t, double tol = 1e-10);

/// Aliased density g_{nu,alpha}(lambda) = sum_k g*_{nu,alpha}(lambda + 2 pi k),
/// lambda in [-pi, pi]. Explicit sum plus Euler-Maclaurin tail, with the
/// certified remainder held below ctrl.tol.
double spectral_density_aliased(double nu, double alpha, double lambda,
                                const AliasingControl& ctrl = {});

/// d/dalpha log g_{nu,alpha}(lambda), by term-wise analytic differentiation of
/// the aliasing sum. h^delta = delta * this value at alpha = delta*theta.
double aliased_log_derivative_alpha(double nu, double alpha, double lambda,
                                    const AliasingControl& ctrl = {});

/// h^delta_{nu,theta}(lambda) = d/dtheta log g^delta (units 1/theta).
double log_density_derivative_aliased(double nu, double theta, double delta, double lambda,
                                      const AliasingControl& ctrl = {});

/// h*_{nu,alpha}(lambda) = alpha^{-1} (2nu - (2nu+1) G(lambda/alpha)), G(w) = 1/(1+w^2).
double log_density_derivative_unaliased(double nu, double alpha, double lambda);

/// Wiener filter a^delta_{b,theta}(lambda) = b g^delta / (b g^delta + 1/(2pi)).
double wiener_filter(double b, double nu, double theta, double delta, double lambda,
                     const AliasingControl& ctrl = {});

/// Unaliased variant a*_{b,alpha}(lambda) built from g* instead of g^delta.
double wiener_filter_unaliased(double b, double nu, double alpha, double lambda);

/// Joint evaluation of the aliased density and its alpha-derivative; shares the
/// per-term work between the two sums. Used by the quadrature layer.
class AliasedDensity {
  public:
    AliasedDensity(double nu, double alpha, AliasingControl ctrl = {});
    double density(double lambda) const;
    double dlog_dalpha(double lambda) const;
    void eval(double lambda, double* g, double* dg_dalpha) const;

    double nu() const { return nu_; }
    double alpha() const { return alpha_; }

  private:
    double nu_, alpha_;
    AliasingControl ctrl_;
    long k0_; // explicit half-width, fixed at construction from the tail bound
};

} // namespace cgemev
