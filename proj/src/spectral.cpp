#include "cgemev/spectral.hpp"

#include "cgemev/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace cgemev {

double matern_constant(double nu) {
    MaternOrder check(nu);
    return std::exp(std::lgamma(nu + 0.5) - std::lgamma(nu)) / std::sqrt(kPi);
}

double spectral_density_unaliased(double nu, double theta, double omega) {
    if (!(theta > 0.0)) throw Error("spectral_density_unaliased: theta must be > 0");
    const double c = matern_constant(nu);
    return c * std::pow(theta, 2.0 * nu) * std::pow(theta * theta + omega * omega, -(nu + 0.5));
}

namespace {

// ---- truncated power sums  sum_k (alpha^2 + (lambda + 2 pi k)^2)^{-t} ------
//
// Explicit terms for |k| <= k0, then one-sided Euler-Maclaurin tails. The
// summand is completely monotone in k on the tail (x0 well past the peak), so
// the remainder after the B4 term is bounded by the first omitted term,
// |B6|/6! * |f^(5)(m)| = |f^(5)(m)| / 30240.

struct TailResult {
    double value;
    double bound;
};

// int_{x0}^inf (alpha^2 + x^2)^{-t} dx via the binomial series in (alpha/x0)^2.
double power_integral_from(double t, double alpha, double x0) {
    const double r = (alpha * alpha) / (x0 * x0);
    double c = 1.0; // (-1)^j (t)_j / j! * (alpha^2)^j * x0^{-2j}, folded with x0 power below
    double xpow = std::pow(x0, 1.0 - 2.0 * t);
    double sum = 0.0;
    for (int j = 0; j < 300; ++j) {
        const double term = c * xpow / (2.0 * t + 2.0 * j - 1.0);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        c *= -(t + j) / (j + 1.0) * r;
    }
    return sum;
}

TailResult em_tail(double t, double alpha, double lambda, long m) {
    const double x = lambda + kTwoPi * static_cast<double>(m);
    const double v = alpha * alpha + x * x;
    const double vp = std::pow(v, -t);
    const double x2 = x * x, x3 = x2 * x, x5 = x3 * x2;
    const double t1 = t, t2 = t + 1.0, t3 = t + 2.0, t4 = t + 3.0, t5 = t + 4.0;

    const double u1 = -2.0 * t1 * x * vp / v;
    const double u3 = 12.0 * t1 * t2 * x * vp / (v * v) - 8.0 * t1 * t2 * t3 * x3 * vp / (v * v * v);
    const double u5 = -120.0 * t1 * t2 * t3 * x * vp / (v * v * v)
                      + 160.0 * t1 * t2 * t3 * t4 * x3 * vp / (v * v * v * v)
                      - 32.0 * t1 * t2 * t3 * t4 * t5 * x5 * vp / (v * v * v * v * v);

    const double integral = power_integral_from(t, alpha, x) / kTwoPi;
    const double f1 = kTwoPi * u1;
    const double f3 = kTwoPi * kTwoPi * kTwoPi * u3;
    const double f5 = std::pow(kTwoPi, 5) * u5;

    TailResult out;
    out.value = integral + 0.5 * vp - f1 / 12.0 + f3 / 720.0;
    out.bound = std::abs(f5) / 30240.0;
    return out;
}

long choose_k0(double nu, double alpha, double tol, long k_max) {
    const double s = nu + 0.5;
    const double c = matern_constant(nu);
    const double pref_g = c * std::pow(alpha, 2.0 * nu);
    const double pref_d1 = 2.0 * nu * c * std::pow(alpha, 2.0 * nu - 1.0);
    const double pref_d2 = (2.0 * nu + 1.0) * c * std::pow(alpha, 2.0 * nu + 1.0);

    long k0 = 16;
    // keep the tail origin far enough out that the EM derivative bounds apply
    while (kTwoPi * (k0 + 1) - kPi < 8.0 * alpha + kTwoPi) k0 *= 2;
    for (;;) {
        if (2 * k0 + 1 > k_max)
            throw TruncationBudgetExceeded(
                "aliasing sum: k_max reached before certified tail bound met (alpha=" +
                std::to_string(alpha) + ")");
        // worst case over lambda in [-pi, pi] is lambda = -pi for the right tail
        const TailResult tg = em_tail(s, alpha, -kPi, k0 + 1);
        const TailResult tg1 = em_tail(s + 1.0, alpha, -kPi, k0 + 1);
        const double bound = 2.0 * (pref_g * tg.bound +
                                    pref_d1 * tg.bound + pref_d2 * tg1.bound);
        if (bound <= 0.5 * tol) return k0;
        k0 *= 2;
    }
}

} // namespace

AliasedDensity::AliasedDensity(double nu, double alpha, AliasingControl ctrl)
    : nu_(nu), alpha_(alpha), ctrl_(ctrl) {
    MaternOrder check(nu);
    if (!(alpha > 0.0)) throw Error("AliasedDensity: alpha must be > 0");
    if (!(ctrl.tol > 0.0) || ctrl.k_max < 1)
        throw Error("AliasingControl: tol > 0 and k_max >= 1 required");
    k0_ = choose_k0(nu_, alpha_, ctrl_.tol, ctrl_.k_max);
}

void AliasedDensity::eval(double lambda, double* g_out, double* dg_out) const {
    const double s = nu_ + 0.5;
    const double a2 = alpha_ * alpha_;
    double ss = 0.0, ss1 = 0.0;
    for (long k = k0_; k >= 1; --k) {
        const double xr = lambda + kTwoPi * static_cast<double>(k);
        const double xl = lambda - kTwoPi * static_cast<double>(k);
        const double vr = a2 + xr * xr, vl = a2 + xl * xl;
        const double pr = std::pow(vr, -s), pl = std::pow(vl, -s);
        ss += pr + pl;
        ss1 += pr / vr + pl / vl;
    }
    {
        const double v = a2 + lambda * lambda;
        const double p = std::pow(v, -s);
        ss += p;
        ss1 += p / v;
    }
    const TailResult r0 = em_tail(s, alpha_, lambda, k0_ + 1);
    const TailResult l0 = em_tail(s, alpha_, -lambda, k0_ + 1);
    const TailResult r1 = em_tail(s + 1.0, alpha_, lambda, k0_ + 1);
    const TailResult l1 = em_tail(s + 1.0, alpha_, -lambda, k0_ + 1);
    ss += r0.value + l0.value;
    ss1 += r1.value + l1.value;

    const double c = matern_constant(nu_);
    const double g = c * std::pow(alpha_, 2.0 * nu_) * ss;
    if (g_out) *g_out = g;
    if (dg_out) {
        const double dg = 2.0 * nu_ * c * std::pow(alpha_, 2.0 * nu_ - 1.0) * ss
                          - (2.0 * nu_ + 1.0) * c * std::pow(alpha_, 2.0 * nu_ + 1.0) * ss1;
        *dg_out = dg;
    }
}

double AliasedDensity::density(double lambda) const {
    double g;
    eval(lambda, &g, nullptr);
    return g;
}

double AliasedDensity::dlog_dalpha(double lambda) const {
    double g, dg;
    eval(lambda, &g, &dg);
    return dg / g;
}

double spectral_density_aliased(double nu, double alpha, double lambda,
                                const AliasingControl& ctrl) {
    return AliasedDensity(nu, alpha, ctrl).density(lambda);
}

double aliased_log_derivative_alpha(double nu, double alpha, double lambda,
                                    const AliasingControl& ctrl) {
    return AliasedDensity(nu, alpha, ctrl).dlog_dalpha(lambda);
}

double log_density_derivative_aliased(double nu, double theta, double delta, double lambda,
                                      const AliasingControl& ctrl) {
    if (!(theta > 0.0) || !(delta > 0.0))
        throw Error("log_density_derivative_aliased: theta, delta must be > 0");
    return delta * aliased_log_derivative_alpha(nu, delta * theta, lambda, ctrl);
}

double log_density_derivative_unaliased(double nu, double alpha, double lambda) {
    MaternOrder check(nu);
    if (!(alpha > 0.0)) throw Error("log_density_derivative_unaliased: alpha must be > 0");
    const double w = lambda / alpha;
    const double G = 1.0 / (1.0 + w * w);
    return (2.0 * nu - (2.0 * nu + 1.0) * G) / alpha;
}

double wiener_filter(double b, double nu, double theta, double delta, double lambda,
                     const AliasingControl& ctrl) {
    if (!(b > 0.0)) throw Error("wiener_filter: b must be > 0");
    const double g = spectral_density_aliased(nu, delta * theta, lambda, ctrl);
    return b * g / (b * g + 1.0 / kTwoPi);
}

double wiener_filter_unaliased(double b, double nu, double alpha, double lambda) {
    if (!(b > 0.0) || !(alpha > 0.0))
        throw Error("wiener_filter_unaliased: b, alpha must be > 0");
    const double c = matern_constant(nu);
    const double g = c * std::pow(alpha, 2.0 * nu) *
                     std::pow(alpha * alpha + lambda * lambda, -(nu + 0.5));
    return b * g / (b * g + 1.0 / kTwoPi);
}

// ---- covariance -------------------------------------------------------------

double covariance(double nu, double theta, double t, double tol) {
    MaternOrder check(nu);
    if (!(theta > 0.0)) throw Error("covariance: theta must be > 0");
    if (t < 0.0) throw Error("covariance: t must be >= 0");
    const double z = theta * t;
    if (z == 0.0) return 1.0;

    const double eps = 1e-12;
    if (std::abs(nu - 0.5) < eps) return std::exp(-z);
    if (std::abs(nu - 1.5) < eps) return (1.0 + z) * std::exp(-z);
    if (std::abs(nu - 2.5) < eps) return (1.0 + z + z * z / 3.0) * std::exp(-z);

    // K(z) = 2 C_nu int_0^inf (1+u^2)^{-(nu+1/2)} cos(z u) du
    const double s = nu + 0.5;
    const double c = matern_constant(nu);
    const double budget = std::max(tol, 1e-14);

    // truncation point: monotone bound 2C U^{1-2s}/(2s-1), oscillation bound 4C (1+U^2)^{-s}/z
    const double u_mono = std::pow(4.0 * c / ((2.0 * s - 1.0) * budget), 1.0 / (2.0 * s - 1.0));
    double U = u_mono;
    const double osc_arg = std::pow(8.0 * c / (budget * z), 1.0 / s);
    if (osc_arg > 1.0) U = std::min(U, std::sqrt(osc_arg - 1.0));
    U = std::max(U, 2.0);

    IntegrateOptions opts;
    opts.abs_tol = 0.5 * budget;
    opts.rel_tol = 0.0;
    opts.max_panels = 60000;
    for (double p = 0.25; p < U; p *= 2.0) opts.breakpoints.push_back(p);
    // seed a few half-periods so the error estimator sees the oscillation
    const double half_period = kPi / z;
    for (int k = 1; k <= 64; ++k) {
        const double p = k * half_period;
        if (p >= U) break;
        opts.breakpoints.push_back(p);
    }
    const auto res = adaptive_integrate(
        [s, z](double u) { return std::pow(1.0 + u * u, -s) * std::cos(z * u); },
        0.0, U, opts);
    return 2.0 * c * res.value;
}

} // namespace cgemev
