#pragma once

#include "cgemev/integrate.hpp"
#include "cgemev/spectral.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cgemev {

/// Cached spectral integrals over [-pi, pi] at the true parameters
/// (nu, b0, theta0, delta). a0 is the Wiener filter, h0 the theta log-derivative
/// of the aliased density, g0 the aliased density itself.
struct SpectralFunctionals {
    double nu = 0, b0 = 0, theta0 = 0, delta = 0;
    double int_a2 = 0;      // int a0^2
    double int_a = 0;       // int a0
    double int_a2_h = 0;    // int a0^2 h0
    double int_a2_h2 = 0;   // int a0^2 h0^2
    double int_a2_hc2 = 0;  // int a0^2 (h0 - 2nu/theta0)^2
    double int_ainv2_g2 = 0; // int a0^{-2} g0^2
    double mass_g = 0;      // int g0 (equals 1 up to quadrature error)
    double j_h0 = 0;        // J0(h0)
    double j_g_over_a2 = 0; // J0(g0 / a0^2)
};

/// Adaptive integral of f over [-pi, pi] to absolute tolerance tol, with the
/// domain pre-split at 0 and on the peak scale alpha^{2nu/(2nu+1)} where the
/// filter mass concentrates. peak_scale <= 0 disables the seeding.
double integrate_spectral(const std::function<double(double)>& f, double tol,
                          double peak_scale = 0.0);

/// Weighted coefficient of variation J_{delta,b,theta}(f) with weight (a^delta)^2:
/// (int w f^2 / int w) / (int w f / int w)^2 - 1. Throws DegenerateWeightedMean
/// when int w f vanishes relative to the Cauchy-Schwarz scale.
double weighted_cv(const std::function<double(double)>& f, const ModelParams& p,
                   double tol = 1e-12);

/// psi(delta, b, theta, b0, theta0) = (int a)^{-1} int a^2 (b0 g0/(b g) - 1),
/// the large-n limit of y^T A (I-A) y / tr A - 1.
double psi(double delta, double b, double theta, double b0, double theta0, double nu,
           double tol = 1e-11);

SpectralFunctionals compute_functionals(const ModelParams& p0, double tol = 1e-12);

struct MlCov {
    double sigma1_sq, sigma12, sigma2_sq;
};
struct GevCov {
    double v1, v12, v2;
};
struct MicroergodicAsymp {
    double sigma3_sq, v3;
};
struct FixedParamAsymp {
    double var_theta_ml0, var_theta_ge0, I0, sigma4_sq, I4;
};

MlCov ml_asymptotic_cov(const SpectralFunctionals& f);
GevCov gev_asymptotic_cov(const SpectralFunctionals& f);
MicroergodicAsymp microergodic_asymptotics(const SpectralFunctionals& f);
FixedParamAsymp fixed_parameter_asymptotics(const SpectralFunctionals& f);

MlCov ml_asymptotic_cov(const ModelParams& p0, double tol = 1e-12);
GevCov gev_asymptotic_cov(const ModelParams& p0, double tol = 1e-12);
MicroergodicAsymp microergodic_asymptotics(const ModelParams& p0, double tol = 1e-12);
FixedParamAsymp fixed_parameter_asymptotics(const ModelParams& p0, double tol = 1e-12);

/// ineff(nu) = (sqrt(pi)/2) ((2nu+1)/(2nu))^2 G(nu+1/2)^2 G(2nu+1/2) / (G(nu)^2 G(2nu+1)),
/// the common small-delta limit of the CGEM-EV-to-ML MSE inefficiencies.
double ineff_closed_form(double nu);

/// Everything for one (nu, b0, theta0, delta): the sigma/v covariance entries
/// (stored exactly as displayed, without the 4 pi factor) and the inefficiency
/// ratios at this delta together with the closed-form limit.
struct AsymptoticReport {
    double nu = 0, b0 = 0, theta0 = 0, delta = 0;
    SpectralFunctionals functionals;
    MlCov ml{};
    GevCov gev{};
    double sigma3_sq = 0, v3 = 0;
    double var_theta_ml0 = 0, var_theta_ge0 = 0, sigma4_sq = 0;
    double I0 = 0, I1 = 0, I2 = 0, I3 = 0, I4 = 0;
    double ineff_nu = 0;
};

AsymptoticReport asymptotic_report(const ModelParams& p0, double tol = 1e-12);

struct IneffTableRow {
    double nu = 0, delta = 0;
    double I0 = 0, I1 = 0, I2 = 0, I3 = 0, I4 = 0;
    double ineff_limit = 0;
    bool ok = false;
    std::string error;
};

/// Table 4.1 reproduction grid; per-cell quadrature failures are recorded in
/// the row rather than thrown.
std::vector<IneffTableRow> inefficiency_table(const std::vector<double>& nu_list,
                                              const std::vector<double>& delta_list,
                                              double b0, double theta0,
                                              double tol = 1e-12);

} // namespace cgemev
