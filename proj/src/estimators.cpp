#include "cgemev/estimators.hpp"

#include "cgemev/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

namespace cgemev {

void SearchBox::validate() const {
    if (!(0.0 < b_lo && b_lo < b_hi) || !(0.0 < theta_lo && theta_lo < theta_hi))
        throw Error("SearchBox: need 0 < lo < hi on both axes");
    if (scan_points < 4 || grid_points < 2) throw Error("SearchBox: too few scan/grid points");
}

SearchBox SearchBox::around(double b0, double theta0, double factor) {
    SearchBox box;
    box.b_lo = b0 / factor;
    box.b_hi = b0 * factor;
    box.theta_lo = theta0 / factor;
    box.theta_hi = theta0 * factor;
    return box;
}

double ev_variance(const Eigen::VectorXd& y, bool* negative) {
    const double v = y.squaredNorm() / static_cast<double>(y.size()) - 1.0;
    if (negative) *negative = (v <= 0.0);
    return v;
}

double microergodic(double b, double theta, double nu) {
    return b * std::pow(theta, 2.0 * nu);
}

double nugget_variance_estimate(const Eigen::VectorXd& y) {
    const int n = static_cast<int>(y.size());
    if (n < 2) throw Error("nugget_variance_estimate: n must be >= 2");
    double acc = 0.0;
    for (int i = 1; i < n; ++i) {
        const double d = y(i) - y(i - 1);
        acc += d * d;
    }
    return acc / (2.0 * (n - 1));
}

namespace {

// ---- scalar solvers ---------------------------------------------------------

// Classic Brent root bracketing refinement on [a, b] with f(a) f(b) <= 0.
double brent_root(const std::function<double(double)>& f, double a, double b, double fa,
                  double fb, double xtol, int max_iter, int* iters) {
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if (iters) *iters = it + 1;
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    return b;
}

// Brent minimization (golden section + parabolic interpolation) on [a, b].
double brent_minimize(const std::function<double(double)>& f, double a, double b, double xtol,
                      int max_iter, int* iters) {
    const double gold = 0.3819660112501051;
    double x = a + gold * (b - a), w = x, v = x;
    double fx = f(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        if (iters) *iters = it + 1;
        const double xm = 0.5 * (a + b);
        const double tol1 = xtol * std::abs(x) + 1e-14;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
        bool golden = true;
        if (std::abs(e) > tol1) {
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double etemp = e;
            e = d;
            if (!(std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x))) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = (xm > x) ? tol1 : -tol1;
                golden = false;
            }
        }
        if (golden) {
            e = (x >= xm) ? a - x : b - x;
            d = gold * e;
        }
        const double u = (std::abs(d) >= tol1) ? x + d : x + (d > 0 ? tol1 : -tol1);
        const double fu = f(u);
        if (fu <= fx) {
            if (u >= x) a = x; else b = x;
            v = w; w = x; x = u;
            fv = fw; fw = fx; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; w = u;
                fv = fw; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u;
                fv = fu;
            }
        }
    }
    return x;
}

// Deterministic Nelder-Mead in 2-D with +inf penalty outside the box.
struct NmResult {
    std::array<double, 2> x;
    double f;
    int iterations;
    bool converged;
};

NmResult nelder_mead_2d(const std::function<double(const std::array<double, 2>&)>& f,
                        std::array<double, 2> start, double step, int max_iter, double ftol) {
    using P = std::array<double, 2>;
    std::array<P, 3> pts{start, P{start[0] + step, start[1]}, P{start[0], start[1] + step}};
    std::array<double, 3> fv{f(pts[0]), f(pts[1]), f(pts[2])};
    int it = 0;
    auto order = [&]() {
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        std::array<P, 3> p2{pts[idx[0]], pts[idx[1]], pts[idx[2]]};
        std::array<double, 3> f2{fv[idx[0]], fv[idx[1]], fv[idx[2]]};
        pts = p2;
        fv = f2;
    };
    for (; it < max_iter; ++it) {
        order();
        if (std::abs(fv[2] - fv[0]) < ftol * (std::abs(fv[0]) + ftol) &&
            std::hypot(pts[2][0] - pts[0][0], pts[2][1] - pts[0][1]) < 1e-9)
            return {pts[0], fv[0], it, true};
        const P centroid{0.5 * (pts[0][0] + pts[1][0]), 0.5 * (pts[0][1] + pts[1][1])};
        auto blend = [&](double coef) {
            return P{centroid[0] + coef * (pts[2][0] - centroid[0]),
                     centroid[1] + coef * (pts[2][1] - centroid[1])};
        };
        const P xr = blend(-1.0);
        const double fr = f(xr);
        if (fr < fv[0]) {
            const P xe = blend(-2.0);
            const double fe = f(xe);
            if (fe < fr) {
                pts[2] = xe; fv[2] = fe;
            } else {
                pts[2] = xr; fv[2] = fr;
            }
        } else if (fr < fv[1]) {
            pts[2] = xr; fv[2] = fr;
        } else {
            const P xc = blend(fr < fv[2] ? -0.5 : 0.5);
            const double fc = f(xc);
            if (fc < std::min(fr, fv[2])) {
                pts[2] = xc; fv[2] = fc;
            } else {
                for (int i = 1; i < 3; ++i) {
                    pts[i] = P{0.5 * (pts[i][0] + pts[0][0]), 0.5 * (pts[i][1] + pts[0][1])};
                    fv[i] = f(pts[i]);
                }
            }
        }
    }
    order();
    return {pts[0], fv[0], it, false};
}

constexpr double kBoundaryRelTol = 1e-3;

bool near_log_edge(double value, double lo, double hi) {
    const double u = std::log(value), ulo = std::log(lo), uhi = std::log(hi);
    return (u - ulo) < kBoundaryRelTol * (uhi - ulo) || (uhi - u) < kBoundaryRelTol * (uhi - ulo);
}

} // namespace

EstimateResult solve_cgem(double b, const Eigen::VectorXd& y, double nu, double delta,
                          const SearchBox& box, std::vector<CgemDiagnostic>* diag) {
    box.validate();
    if (!(b > 0.0)) throw Error("solve_cgem: b must be > 0");
    const int n = static_cast<int>(y.size());

    auto statistic = [&](double theta) {
        const CorrelationKernel kernel = build_kernel(ModelParams(nu, b, theta, delta), n);
        const FilterOperator op(b, kernel);
        const double s = op.cgem_statistic(y);
        if (diag) {
            const Eigen::VectorXd u = op.solve_m(y);
            diag->push_back({theta, op.trace(), y.dot(u) - u.squaredNorm(), s});
        }
        return s;
    };

    const double ulo = std::log(box.theta_lo), uhi = std::log(box.theta_hi);
    const int ns = box.scan_points;
    std::vector<double> us(static_cast<std::size_t>(ns)), sv(static_cast<std::size_t>(ns));
    int argmin = 0;
    for (int i = 0; i < ns; ++i) {
        us[static_cast<std::size_t>(i)] = ulo + (uhi - ulo) * i / (ns - 1);
        sv[static_cast<std::size_t>(i)] = statistic(std::exp(us[static_cast<std::size_t>(i)]));
        if (std::abs(sv[static_cast<std::size_t>(i)]) < std::abs(sv[static_cast<std::size_t>(argmin)])) argmin = i;
    }

    std::vector<std::pair<int, int>> brackets;
    for (int i = 0; i + 1 < ns; ++i)
        if (sv[static_cast<std::size_t>(i)] == 0.0 ||
            (sv[static_cast<std::size_t>(i)] > 0.0) != (sv[static_cast<std::size_t>(i + 1)] > 0.0))
            brackets.emplace_back(i, i + 1);

    EstimateResult res;
    res.method = "gev-root";
    res.b_hat = b;
    res.iterations = ns;

    if (brackets.empty()) {
        // statistic keeps one sign on the whole box: report the nearest boundary
        res.theta_hat = (argmin <= ns / 2) ? box.theta_lo : box.theta_hi;
        res.boundary_hit = true;
        res.converged = false;
        res.c_hat = microergodic(b, res.theta_hat, nu);
        return res;
    }

    // The population version of the equation is monotone decreasing in theta,
    // so the consistent root is a downcrossing. Spurious brackets appear where
    // the statistic hovers near zero (it vanishes identically as theta -> inf
    // when b = b_EV), but those have a small swing across the bracket. Pick the
    // downcrossing with the largest swing; fall back to the largest swing of
    // any direction.
    const auto swing = [&](const std::pair<int, int>& br) {
        return std::abs(sv[static_cast<std::size_t>(br.first)] -
                        sv[static_cast<std::size_t>(br.second)]);
    };
    std::pair<int, int> chosen = brackets.front();
    double best_swing = -1.0;
    bool have_down = false;
    for (const auto& br : brackets) {
        const bool down = sv[static_cast<std::size_t>(br.first)] > 0.0 &&
                          sv[static_cast<std::size_t>(br.second)] <= 0.0;
        if ((down && !have_down) || (down == have_down && swing(br) > best_swing)) {
            chosen = br;
            best_swing = swing(br);
            have_down = have_down || down;
        }
    }
    int iters = 0;
    const double best_u = brent_root(
        [&](double u) { return statistic(std::exp(u)); }, us[static_cast<std::size_t>(chosen.first)],
        us[static_cast<std::size_t>(chosen.second)], sv[static_cast<std::size_t>(chosen.first)],
        sv[static_cast<std::size_t>(chosen.second)], box.root_xtol, 100, &iters);
    res.iterations += iters;
    res.multiple_roots = brackets.size() > 1;
    res.theta_hat = std::exp(best_u);
    res.c_hat = microergodic(b, res.theta_hat, nu);
    res.boundary_hit = near_log_edge(res.theta_hat, box.theta_lo, box.theta_hi);
    res.converged = !res.boundary_hit;
    return res;
}

EstimateResult cgemev_estimate(const Eigen::VectorXd& y, double nu, double delta,
                               const SearchBox& box) {
    bool negative = false;
    const double b_ev = ev_variance(y, &negative);
    if (negative)
        throw EVNegative("cgemev_estimate: b_EV <= 0, the estimating equation has no usable root");
    EstimateResult res = solve_cgem(b_ev, y, nu, delta, box);
    res.method = "gev";
    return res;
}

EstimateResult ml_estimate(const Eigen::VectorXd& y, double nu, double delta,
                           const SearchBox& box) {
    box.validate();
    const int n = static_cast<int>(y.size());

    auto loglik = [&](double b, double theta) {
        const CorrelationKernel kernel = build_kernel(ModelParams(nu, b, theta, delta), n);
        return FilterOperator(b, kernel).log_likelihood(y);
    };

    const double blo = std::log(box.b_lo), bhi = std::log(box.b_hi);
    const double tlo = std::log(box.theta_lo), thi = std::log(box.theta_hi);
    const int ng = box.grid_points;
    double best_f = -std::numeric_limits<double>::infinity();
    std::array<double, 2> best_x{0.5 * (blo + bhi), 0.5 * (tlo + thi)};
    for (int i = 0; i < ng; ++i) {
        for (int j = 0; j < ng; ++j) {
            const double ub = blo + (bhi - blo) * i / (ng - 1);
            const double ut = tlo + (thi - tlo) * j / (ng - 1);
            const double f = loglik(std::exp(ub), std::exp(ut));
            if (f > best_f) {
                best_f = f;
                best_x = {ub, ut};
            }
        }
    }
    if (!std::isfinite(best_f))
        throw OptimizerStalled("ml_estimate: likelihood not finite anywhere on the grid");

    auto penalized = [&](const std::array<double, 2>& u) {
        if (u[0] < blo || u[0] > bhi || u[1] < tlo || u[1] > thi)
            return std::numeric_limits<double>::infinity();
        return -loglik(std::exp(u[0]), std::exp(u[1]));
    };
    const NmResult nm = nelder_mead_2d(penalized, best_x, 0.12, 300, 1e-11);

    EstimateResult res;
    res.method = "ml";
    res.b_hat = std::exp(nm.x[0]);
    res.theta_hat = std::exp(nm.x[1]);
    res.c_hat = microergodic(res.b_hat, res.theta_hat, nu);
    res.iterations = ng * ng + nm.iterations;
    res.boundary_hit = near_log_edge(res.b_hat, box.b_lo, box.b_hi) ||
                       near_log_edge(res.theta_hat, box.theta_lo, box.theta_hi);
    res.converged = nm.converged && !res.boundary_hit;
    return res;
}

namespace {

EstimateResult ml_1d_theta(const Eigen::VectorXd& y, double b_fixed, double nu, double delta,
                           const SearchBox& box, const std::string& method) {
    box.validate();
    const int n = static_cast<int>(y.size());
    auto neg_loglik = [&](double u) {
        const double theta = std::exp(u);
        const CorrelationKernel kernel = build_kernel(ModelParams(nu, b_fixed, theta, delta), n);
        return -FilterOperator(b_fixed, kernel).log_likelihood(y);
    };
    int iters = 0;
    const double u = brent_minimize(neg_loglik, std::log(box.theta_lo), std::log(box.theta_hi),
                                    1e-10, 200, &iters);
    EstimateResult res;
    res.method = method;
    res.b_hat = b_fixed;
    res.theta_hat = std::exp(u);
    res.c_hat = microergodic(b_fixed, res.theta_hat, nu);
    res.iterations = iters;
    res.boundary_hit = near_log_edge(res.theta_hat, box.theta_lo, box.theta_hi);
    res.converged = !res.boundary_hit;
    return res;
}

} // namespace

EstimateResult ml_fixed_b(const Eigen::VectorXd& y, double b0, double nu, double delta,
                          const SearchBox& box) {
    if (!(b0 > 0.0)) throw Error("ml_fixed_b: b0 must be > 0");
    return ml_1d_theta(y, b0, nu, delta, box, "ml0");
}

EstimateResult hybrid_estimate(const Eigen::VectorXd& y, double nu, double delta,
                               const SearchBox& box) {
    bool negative = false;
    const double b_ev = ev_variance(y, &negative);
    if (negative) throw EVNegative("hybrid_estimate: b_EV <= 0");
    EstimateResult res = ml_1d_theta(y, b_ev, nu, delta, box, "hybrid");
    return res;
}

EstimateResult ml_fixed_c(const Eigen::VectorXd& y, double c0, double nu, double delta,
                          const SearchBox& box) {
    box.validate();
    if (!(c0 > 0.0)) throw Error("ml_fixed_c: c0 must be > 0");
    const int n = static_cast<int>(y.size());

    // implied theta = (c0/b)^{1/(2 nu)} must stay inside Theta
    const double b_from_theta_hi = c0 / std::pow(box.theta_hi, 2.0 * nu);
    const double b_from_theta_lo = c0 / std::pow(box.theta_lo, 2.0 * nu);
    const double lo = std::max(box.b_lo, b_from_theta_hi);
    const double hi = std::min(box.b_hi, b_from_theta_lo);
    if (!(lo < hi))
        throw ReparamOutOfBox("ml_fixed_c: implied theta range does not intersect Theta");

    auto neg_loglik = [&](double u) {
        const double b = std::exp(u);
        const double theta = std::pow(c0 / b, 1.0 / (2.0 * nu));
        const CorrelationKernel kernel = build_kernel(ModelParams(nu, b, theta, delta), n);
        return -FilterOperator(b, kernel).log_likelihood(y);
    };
    int iters = 0;
    const double u = brent_minimize(neg_loglik, std::log(lo), std::log(hi), 1e-10, 200, &iters);

    EstimateResult res;
    res.method = "mlc";
    res.b_hat = std::exp(u);
    res.theta_hat = std::pow(c0 / res.b_hat, 1.0 / (2.0 * nu));
    res.c_hat = c0;
    res.iterations = iters;
    res.boundary_hit = near_log_edge(res.b_hat, lo, hi);
    res.converged = !res.boundary_hit;
    return res;
}

} // namespace cgemev
