#include "cgemev/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace cgemev;

namespace {

// int_{-inf}^{inf} (1+x^q)^{-m} dx via the substitution x = u/(1-u); used by the
// Lemma 5.4 oracle.
double power_law_integral(double q, int m) {
    IntegrateOptions opts;
    opts.abs_tol = 1e-12;
    const auto res = adaptive_integrate(
        [&](double u) {
            const double x = u / (1.0 - u);
            const double jac = 1.0 / ((1.0 - u) * (1.0 - u));
            return std::pow(1.0 + std::pow(x, q), -m) * jac;
        },
        0.0, 1.0 - 1e-12, opts);
    return 2.0 * res.value;
}

} // namespace

TEST_CASE("integrate_spectral basics") {
    CHECK(integrate_spectral([](double) { return 1.0; }, 1e-12) ==
          doctest::Approx(kTwoPi).epsilon(1e-12));
    const AliasedDensity dens(1.5, 0.05);
    CHECK(integrate_spectral([&](double l) { return dens.density(l); }, 1e-9, 0.05) ==
          doctest::Approx(1.0).epsilon(1e-7));
    CHECK_THROWS_AS(adaptive_integrate([](double x) { return 1.0 / std::sqrt(std::abs(x) + 1e-300); },
                                       -1.0, 1.0, IntegrateOptions{1e-14, 0.0, 4, {}}),
                    QuadratureFailure);
}

TEST_CASE("lemma 5.4 equivalent for int a^2 at nu = 1/2") {
    const double alpha = 1e-3;
    const ModelParams p(0.5, 1.0, 1.0, alpha);
    const SpectralFunctionals f = compute_functionals(p, 1e-11);
    const double pref = std::pow(alpha, 2.0 * p.nu / (2.0 * p.nu + 1.0)) *
                        std::pow(kTwoPi * matern_constant(p.nu) * p.b, 1.0 / (2.0 * p.nu + 1.0));
    CHECK(f.int_a2 / (pref * power_law_integral(2.0 * p.nu + 1.0, 2)) ==
          doctest::Approx(1.0).epsilon(0.05));
    CHECK(f.int_a / (pref * power_law_integral(2.0 * p.nu + 1.0, 1)) ==
          doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("weighted_cv properties") {
    const ModelParams p(0.5, 1.0, 1.0, 0.05);
    CHECK(weighted_cv([](double) { return 3.7; }, p, 1e-11) == doctest::Approx(0.0).epsilon(1e-9));
    // J >= 0 for assorted even f with nonzero weighted mean
    CHECK(weighted_cv([](double l) { return 2.0 + std::cos(l); }, p, 1e-11) >= 0.0);
    CHECK(weighted_cv([](double l) { return 1.0 + l * l; }, p, 1e-11) >= 0.0);
    CHECK(weighted_cv([](double l) { return std::exp(-l * l); }, p, 1e-11) >= 0.0);

    // J0(h0) decreases across delta = 0.1, 0.03, 0.01
    double prev = std::numeric_limits<double>::infinity();
    for (double delta : {0.1, 0.03, 0.01}) {
        const SpectralFunctionals f = compute_functionals(ModelParams(0.5, 1, 1, delta), 1e-11);
        CHECK(f.j_h0 < prev);
        CHECK(f.j_h0 >= 0.0);
        prev = f.j_h0;
    }

    // degenerate weighted mean: f = h0 centered at its weighted mean
    const ModelParams pd(0.5, 1.0, 1.0, 0.1);
    const SpectralFunctionals fd = compute_functionals(pd, 1e-11);
    const double hbar = fd.int_a2_h / fd.int_a2;
    const AliasedDensity dens(pd.nu, pd.alpha());
    CHECK_THROWS_AS(weighted_cv(
                        [&](double l) {
                            double g, dg;
                            dens.eval(l, &g, &dg);
                            return pd.delta * dg / g - hbar;
                        },
                        pd, 1e-11),
                    DegenerateWeightedMean);
}

TEST_CASE("psi zero at truth, sign pattern, small-delta equivalent") {
    CHECK(std::abs(psi(0.05, 1.0, 1.0, 1.0, 1.0, 0.5)) < 1e-9);
    // small-delta equivalent (2nu/(2nu+1)) (c0/c - 1): c-ratio 2 at nu = 1/2 -> 0.5
    const double val = psi(1e-3, 0.5, 1.0, 1.0, 1.0, 0.5);
    CHECK(val == doctest::Approx(0.5).epsilon(0.05));
    // sign(psi) = sign(c0 - c) on a (b, theta) grid at delta = 1e-3
    for (double b : {0.5, 1.0, 2.0}) {
        for (double theta : {0.6, 1.0, 1.7}) {
            const double c = b * theta;
            if (std::abs(c - 1.0) < 1e-12) continue;
            const double ps = psi(1e-3, b, theta, 1.0, 1.0, 0.5);
            CHECK(ps * (1.0 - c) > 0.0);
        }
    }
}

TEST_CASE("ml asymptotic covariance: positive definiteness") {
    for (double nu : {0.5, 1.5}) {
        for (double delta : {0.1, 0.01}) {
            const MlCov ml = ml_asymptotic_cov(ModelParams(nu, 1.0, 1.0, delta), 1e-12);
            CHECK(ml.sigma1_sq > 0.0);
            CHECK(ml.sigma2_sq > 0.0);
            CHECK(ml.sigma1_sq * ml.sigma2_sq - ml.sigma12 * ml.sigma12 > 0.0);
            CHECK(ml.sigma12 < 0.0); // int a0^2 h0 > 0 for the Matern family
        }
    }
}

TEST_CASE("identity suite on functionals") {
    for (double nu : {0.5, 1.5}) {
        for (double delta : {0.1, 0.01}) {
            const ModelParams p(nu, 1.0, 1.0, delta);
            const SpectralFunctionals f = compute_functionals(p, 1e-12);

            // Cauchy-Schwarz
            CHECK(f.int_a2_h2 * f.int_a2 >= f.int_a2_h * f.int_a2_h);
            CHECK(f.j_h0 >= 0.0);
            CHECK(f.j_g_over_a2 >= 0.0);

            // I0 = 1 + J0(h0): cached-ratio route vs weighted_cv route
            const FixedParamAsymp fixed = fixed_parameter_asymptotics(f);
            CHECK(std::abs(fixed.I0 - (1.0 + f.j_h0)) < 1e-10 * std::max(1.0, fixed.I0));

            // v1 two-path: b0^2 int a^{-2} g^2 = int (b0 g + 1/2pi)^2
            const GevCov gev = gev_asymptotic_cov(f);
            const AliasedDensity dens(nu, p.alpha());
            const double path2 = integrate_spectral(
                [&](double l) {
                    const double v = p.b * dens.density(l) + 1.0 / kTwoPi;
                    return v * v;
                },
                1e-12, p.alpha());
            CHECK(std::abs(gev.v1 - path2) < 1e-10 * std::max(1.0, std::abs(gev.v1)));

            // sigma3^2 delta-method oracle
            const MlCov ml = ml_asymptotic_cov(f);
            const MicroergodicAsymp micro = microergodic_asymptotics(f);
            const double c0 = p.microergodic();
            const double dcdb = std::pow(p.theta, 2.0 * nu);
            const double dcdt = 2.0 * nu * c0 / p.theta;
            const double oracle = dcdb * dcdb * ml.sigma1_sq + 2.0 * dcdb * dcdt * ml.sigma12 +
                                  dcdt * dcdt * ml.sigma2_sq;
            CHECK(std::abs(micro.sigma3_sq - oracle) < 1e-9 * std::abs(oracle));
        }
    }
}

TEST_CASE("int a2 h / int a2 approaches 2 nu / theta0 monotonically") {
    for (double nu : {0.5, 1.5}) {
        const double target = 2.0 * nu;
        double prev_gap = std::numeric_limits<double>::infinity();
        for (double delta : {0.1, 0.03, 0.01, 0.003}) {
            const SpectralFunctionals f = compute_functionals(ModelParams(nu, 1, 1, delta), 1e-11);
            const double gap = std::abs(f.int_a2_h / f.int_a2 - target);
            CHECK(gap < prev_gap);
            prev_gap = gap;
        }
    }
}

TEST_CASE("ineff closed form reproduces Table 4.1") {
    CHECK(std::abs(ineff_closed_form(0.5) - 1.0) < 1e-12);
    CHECK(std::abs(ineff_closed_form(1.5) - 10.0 / 9.0) < 1e-12);
    CHECK(std::abs(ineff_closed_form(2.5) - 63.0 / 50.0) < 1e-12);
    CHECK(std::abs(ineff_closed_form(3.5) - 1716.0 / 1225.0) < 1e-12);
    CHECK(ineff_closed_form(1.0) == doctest::Approx(1.04093).epsilon(5e-6));
    CHECK(ineff_closed_form(2.0) == doctest::Approx(1.18596).epsilon(5e-6));
    CHECK(ineff_closed_form(3.0) == doctest::Approx(1.33174).epsilon(5e-6));
    CHECK(ineff_closed_form(4.0) == doctest::Approx(1.46727).epsilon(5e-6));
    // increasing on the table grid
    double prev = 0.0;
    for (double nu : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0}) {
        const double v = ineff_closed_form(nu);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("I1 < I2 at finite delta") {
    for (double nu : {0.5, 1.5, 2.5}) {
        for (double delta : {0.1, 0.01}) {
            const AsymptoticReport r = asymptotic_report(ModelParams(nu, 1, 1, delta), 1e-11);
            CHECK(r.I1 < r.I2);
        }
    }
}

TEST_CASE("sigma1^2 roughly scales as b0^2 between b0 = 1 and 2") {
    // filter re-derived at the new b0; the scaling is only asymptotic, so the
    // observed ratio is checked against a broad band and recorded here: at
    // delta = 0.003 the ratio sits near 3.7, not exactly 4.
    const MlCov a = ml_asymptotic_cov(ModelParams(0.5, 1.0, 1.0, 0.003), 1e-11);
    const MlCov b = ml_asymptotic_cov(ModelParams(0.5, 2.0, 1.0, 0.003), 1e-11);
    const double ratio = b.sigma1_sq / a.sigma1_sq;
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
}

TEST_CASE("asymptotic report wiring and table") {
    const AsymptoticReport r = asymptotic_report(ModelParams(0.5, 1, 1, 0.01), 1e-12);
    CHECK(r.I1 == doctest::Approx(r.gev.v1 / r.ml.sigma1_sq).epsilon(1e-14));
    CHECK(r.I2 == doctest::Approx(r.gev.v2 / r.ml.sigma2_sq).epsilon(1e-14));
    CHECK(r.I3 == doctest::Approx(r.v3 / r.sigma3_sq).epsilon(1e-14));
    CHECK(r.I0 == doctest::Approx(r.var_theta_ge0 / r.var_theta_ml0).epsilon(1e-14));
    CHECK(r.ineff_nu == doctest::Approx(1.0).epsilon(1e-12));

    const auto rows = inefficiency_table({0.5, 1.5}, {0.1, 0.01}, 1.0, 1.0, 1e-11);
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) CHECK(row.ok);

    // delta -> 0 limits are independent of (b0, theta0); finite-delta entries are not
    const auto rows2 = inefficiency_table({0.5}, {0.01}, 5.0, 3.0, 1e-11);
    CHECK(rows2[0].ineff_limit == doctest::Approx(rows[0].ineff_limit).epsilon(1e-14));
    CHECK(rows2[0].I2 != doctest::Approx(rows[1].I2).epsilon(1e-6));
}

TEST_CASE("degenerate information guard") {
    SpectralFunctionals f;
    f.nu = 0.5;
    f.b0 = 1.0;
    f.theta0 = 1.0;
    f.delta = 0.01;
    f.int_a2 = 1.0;
    f.int_a2_h = 0.0;
    f.int_a2_h2 = 1.0;
    f.j_h0 = 1.0;
    CHECK_THROWS_AS(ml_asymptotic_cov(f), DegenerateInformation);
    CHECK_THROWS_AS(gev_asymptotic_cov(f), DegenerateInformation);
    CHECK_THROWS_AS(fixed_parameter_asymptotics(f), DegenerateInformation);
}
