#include "cgemev/quadrature.hpp"

#include "cgemev/errors.hpp"

#include <cmath>

namespace cgemev {

namespace {

std::vector<double> peak_seeds(double peak_scale) {
    std::vector<double> pts;
    if (peak_scale > 0.0) {
        for (double p = peak_scale / 64.0; p < kPi; p *= 4.0) pts.push_back(p);
    }
    return pts;
}

// Even integrands are folded onto [0, pi]; all spectral functionals below are
// even in lambda by construction.
double integrate_even(const std::function<double(double)>& f, double tol, double peak_scale,
                      int max_panels = 20000) {
    IntegrateOptions opts;
    opts.abs_tol = 0.5 * tol;
    opts.rel_tol = 1e-13;
    opts.max_panels = max_panels;
    opts.breakpoints = peak_seeds(peak_scale);
    return 2.0 * adaptive_integrate(f, 0.0, kPi, opts).value;
}

double filter_peak_scale(const ModelParams& p) {
    const double al = p.alpha();
    // mass of a^2 concentrates below alpha^{2nu/(2nu+1)}; the density peak
    // itself has width alpha
    return std::min(al, std::pow(al, 2.0 * p.nu / (2.0 * p.nu + 1.0)));
}

} // namespace

double integrate_spectral(const std::function<double(double)>& f, double tol,
                          double peak_scale) {
    IntegrateOptions opts;
    opts.abs_tol = tol;
    opts.rel_tol = 0.0;
    opts.max_panels = 40000;
    opts.breakpoints.push_back(0.0);
    for (double p : peak_seeds(peak_scale)) {
        opts.breakpoints.push_back(p);
        opts.breakpoints.push_back(-p);
    }
    return adaptive_integrate(f, -kPi, kPi, opts).value;
}

double weighted_cv(const std::function<double(double)>& f, const ModelParams& p,
                   double tol) {
    const AliasedDensity dens(p.nu, p.alpha());
    auto w = [&](double l) {
        const double g = dens.density(l);
        const double a = p.b * g / (p.b * g + 1.0 / kTwoPi);
        return a * a;
    };
    const double scale = filter_peak_scale(p);
    const double iw = integrate_even(w, tol, scale);
    const double iwf = integrate_even([&](double l) { return w(l) * f(l); }, tol, scale);
    const double iwf2 = integrate_even([&](double l) { return w(l) * f(l) * f(l); }, tol, scale);
    if (iwf * iwf < 1e-24 * iw * iwf2)
        throw DegenerateWeightedMean("weighted_cv: int w f vanishes; J is unbounded");
    return (iwf2 / iw) / ((iwf / iw) * (iwf / iw)) - 1.0;
}

double psi(double delta, double b, double theta, double b0, double theta0, double nu,
           double tol) {
    if (!(delta > 0) || !(b > 0) || !(theta > 0) || !(b0 > 0) || !(theta0 > 0))
        throw Error("psi: all parameters must be positive");
    const AliasedDensity gc(nu, delta * theta);
    const AliasedDensity g0(nu, delta * theta0);
    auto a = [&](double l) {
        const double g = gc.density(l);
        return b * g / (b * g + 1.0 / kTwoPi);
    };
    const ModelParams pc(nu, b, theta, delta);
    const double scale = filter_peak_scale(pc);
    const double ia = integrate_even(a, tol, scale);
    const double num = integrate_even(
        [&](double l) {
            const double av = a(l);
            return av * av * (b0 * g0.density(l) / (b * gc.density(l)) - 1.0);
        },
        tol, scale);
    return num / ia;
}

SpectralFunctionals compute_functionals(const ModelParams& p0, double tol) {
    const AliasedDensity dens(p0.nu, p0.alpha());
    auto gh = [&](double l, double* g, double* h) {
        double dg;
        dens.eval(l, g, &dg);
        *h = p0.delta * dg / *g; // d/dtheta log g^delta
    };
    auto a0 = [&](double g) { return p0.b * g / (p0.b * g + 1.0 / kTwoPi); };
    const double scale = filter_peak_scale(p0);
    const double r = 2.0 * p0.nu / p0.theta;

    SpectralFunctionals f;
    f.nu = p0.nu;
    f.b0 = p0.b;
    f.theta0 = p0.theta;
    f.delta = p0.delta;

    f.int_a2 = integrate_even([&](double l) {
        const double a = a0(dens.density(l));
        return a * a;
    }, tol, scale);
    f.int_a = integrate_even([&](double l) { return a0(dens.density(l)); }, tol, scale);
    f.int_a2_h = integrate_even([&](double l) {
        double g, h;
        gh(l, &g, &h);
        const double a = a0(g);
        return a * a * h;
    }, tol, scale);
    f.int_a2_h2 = integrate_even([&](double l) {
        double g, h;
        gh(l, &g, &h);
        const double a = a0(g);
        return a * a * h * h;
    }, tol, scale);
    f.int_a2_hc2 = integrate_even([&](double l) {
        double g, h;
        gh(l, &g, &h);
        const double a = a0(g);
        return a * a * (h - r) * (h - r);
    }, tol, scale);
    f.int_ainv2_g2 = integrate_even([&](double l) {
        const double g = dens.density(l);
        const double ratio = g / a0(g); // = g + 1/(2 pi b)
        return ratio * ratio;
    }, tol, scale);
    f.mass_g = integrate_even([&](double l) { return dens.density(l); }, tol, scale);

    // J functionals through the weighted_cv operation (independent quadratures)
    f.j_h0 = weighted_cv([&](double l) {
        double g, h;
        gh(l, &g, &h);
        return h;
    }, p0, tol);
    f.j_g_over_a2 = f.int_a2 * f.int_ainv2_g2 / (f.mass_g * f.mass_g) - 1.0;
    return f;
}

namespace {

void require_information(const SpectralFunctionals& f) {
    if (std::abs(f.int_a2_h) < 1e-12 * f.int_a2)
        throw DegenerateInformation("int a0^2 h0 vanishes; asymptotic information is degenerate");
}

} // namespace

MlCov ml_asymptotic_cov(const SpectralFunctionals& f) {
    require_information(f);
    if (!(f.j_h0 > 0.0))
        throw DegenerateInformation("J0(h0) must be > 0 for the ML covariance");
    const double S = f.int_a2_h;
    const double common = 1.0 / (S * S * f.j_h0);
    return MlCov{
        f.b0 * f.b0 * f.int_a2_h2 * common,
        -f.b0 * S * common,
        f.int_a2 * common,
    };
}

GevCov gev_asymptotic_cov(const SpectralFunctionals& f) {
    require_information(f);
    const double S = f.int_a2_h;
    return GevCov{
        f.b0 * f.b0 * f.int_ainv2_g2,
        -f.b0 * f.j_g_over_a2 / S,
        f.j_g_over_a2 * f.int_a2 / (S * S),
    };
}

MicroergodicAsymp microergodic_asymptotics(const SpectralFunctionals& f) {
    require_information(f);
    const double c0 = f.b0 * std::pow(f.theta0, 2.0 * f.nu);
    const double S = f.int_a2_h;
    MicroergodicAsymp out;
    out.sigma3_sq = c0 * c0 * f.int_a2_hc2 / (S * S * f.j_h0);
    // delta method on the Theorem 4.1a covariance of (b_EV, theta_GEV)
    const GevCov v = gev_asymptotic_cov(f);
    const double dcdb = std::pow(f.theta0, 2.0 * f.nu);
    const double dcdt = 2.0 * f.nu * c0 / f.theta0;
    out.v3 = dcdb * dcdb * v.v1 + 2.0 * dcdb * dcdt * v.v12 + dcdt * dcdt * v.v2;
    return out;
}

FixedParamAsymp fixed_parameter_asymptotics(const SpectralFunctionals& f) {
    require_information(f);
    if (!(f.int_a2_hc2 > 0.0))
        throw DegenerateInformation("int a0^2 (h0 - 2nu/theta0)^2 must be > 0");
    FixedParamAsymp out;
    out.var_theta_ml0 = 1.0 / f.int_a2_h2;
    out.var_theta_ge0 = f.int_a2 / (f.int_a2_h * f.int_a2_h);
    out.I0 = out.var_theta_ge0 / out.var_theta_ml0;
    const double r = 2.0 * f.nu / f.theta0;
    out.sigma4_sq = f.b0 * f.b0 * r * r / f.int_a2_hc2;
    out.I4 = f.b0 * f.b0 * f.int_ainv2_g2 / out.sigma4_sq;
    return out;
}

MlCov ml_asymptotic_cov(const ModelParams& p0, double tol) {
    return ml_asymptotic_cov(compute_functionals(p0, tol));
}
GevCov gev_asymptotic_cov(const ModelParams& p0, double tol) {
    return gev_asymptotic_cov(compute_functionals(p0, tol));
}
MicroergodicAsymp microergodic_asymptotics(const ModelParams& p0, double tol) {
    return microergodic_asymptotics(compute_functionals(p0, tol));
}
FixedParamAsymp fixed_parameter_asymptotics(const ModelParams& p0, double tol) {
    return fixed_parameter_asymptotics(compute_functionals(p0, tol));
}

double ineff_closed_form(double nu) {
    MaternOrder check(nu);
    const double ratio = (2.0 * nu + 1.0) / (2.0 * nu);
    const double lg = 2.0 * std::lgamma(nu + 0.5) + std::lgamma(2.0 * nu + 0.5) -
                      2.0 * std::lgamma(nu) - std::lgamma(2.0 * nu + 1.0);
    return 0.5 * std::sqrt(kPi) * ratio * ratio * std::exp(lg);
}

AsymptoticReport asymptotic_report(const ModelParams& p0, double tol) {
    AsymptoticReport r;
    r.nu = p0.nu;
    r.b0 = p0.b;
    r.theta0 = p0.theta;
    r.delta = p0.delta;
    r.functionals = compute_functionals(p0, tol);
    r.ml = ml_asymptotic_cov(r.functionals);
    r.gev = gev_asymptotic_cov(r.functionals);
    const MicroergodicAsymp micro = microergodic_asymptotics(r.functionals);
    r.sigma3_sq = micro.sigma3_sq;
    r.v3 = micro.v3;
    const FixedParamAsymp fixed = fixed_parameter_asymptotics(r.functionals);
    r.var_theta_ml0 = fixed.var_theta_ml0;
    r.var_theta_ge0 = fixed.var_theta_ge0;
    r.sigma4_sq = fixed.sigma4_sq;
    r.I0 = fixed.I0;
    r.I1 = r.gev.v1 / r.ml.sigma1_sq;
    r.I2 = r.gev.v2 / r.ml.sigma2_sq;
    r.I3 = r.v3 / r.sigma3_sq;
    r.I4 = fixed.I4;
    r.ineff_nu = ineff_closed_form(p0.nu);
    return r;
}

std::vector<IneffTableRow> inefficiency_table(const std::vector<double>& nu_list,
                                              const std::vector<double>& delta_list,
                                              double b0, double theta0, double tol) {
    std::vector<IneffTableRow> rows;
    for (double nu : nu_list) {
        for (double delta : delta_list) {
            IneffTableRow row;
            row.nu = nu;
            row.delta = delta;
            row.ineff_limit = ineff_closed_form(nu);
            try {
                const AsymptoticReport rep = asymptotic_report(ModelParams(nu, b0, theta0, delta), tol);
                row.I0 = rep.I0;
                row.I1 = rep.I1;
                row.I2 = rep.I2;
                row.I3 = rep.I3;
                row.I4 = rep.I4;
                row.ok = true;
            } catch (const Error& e) {
                row.ok = false;
                row.error = e.what();
            }
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace cgemev
