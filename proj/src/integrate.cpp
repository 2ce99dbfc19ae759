#include "cgemev/integrate.hpp"

#include "cgemev/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace cgemev {

namespace {

struct GaussRule {
    std::vector<double> node;   // on (-1, 1)
    std::vector<double> weight;
};

// Gauss-Legendre nodes/weights by Newton iteration on P_n. Machine precision
// for the small orders used here.
GaussRule legendre_rule(int n) {
    GaussRule r;
    r.node.resize(n);
    r.weight.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.node[i] = -x;
        r.node[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.weight[i] = w;
        r.weight[n - 1 - i] = w;
    }
    return r;
}

const GaussRule& rule7() {
    static const GaussRule r = legendre_rule(7);
    return r;
}
const GaussRule& rule15() {
    static const GaussRule r = legendre_rule(15);
    return r;
}

struct Panel {
    double a, b, value, err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

Panel eval_panel(const std::function<double(double)>& f, double a, double b) {
    const GaussRule& g7 = rule7();
    const GaussRule& g15 = rule15();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s15 = 0.0;
    for (int i = 0; i < 15; ++i) s15 += g15.weight[i] * f(mid + half * g15.node[i]);
    double s7 = 0.0;
    for (int i = 0; i < 7; ++i) s7 += g7.weight[i] * f(mid + half * g7.node[i]);
    s15 *= half;
    s7 *= half;
    double err = std::abs(s15 - s7);
    return Panel{a, b, s15, err};
}

} // namespace

IntegralResult adaptive_integrate(const std::function<double(double)>& f,
                                  double a, double b,
                                  const IntegrateOptions& opts) {
    if (!(b > a)) return {0.0, 0.0, 0};

    std::vector<double> cuts;
    cuts.push_back(a);
    cuts.push_back(b);
    for (double p : opts.breakpoints)
        if (p > a && p < b) cuts.push_back(p);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<Panel> heap;
    double total = 0.0, total_err = 0.0;
    int n_panels = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Panel p = eval_panel(f, cuts[i], cuts[i + 1]);
        total += p.value;
        total_err += p.err;
        heap.push(p);
        ++n_panels;
    }

    const double width_floor = 64.0 * std::numeric_limits<double>::epsilon() * (b - a);
    double frozen_err = 0.0; // error carried by panels too narrow to split

    auto target = [&]() {
        return std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
    };

    while (total_err + frozen_err > target() && !heap.empty()) {
        if (n_panels >= opts.max_panels)
            throw QuadratureFailure("adaptive_integrate: panel budget exhausted before tolerance");
        Panel worst = heap.top();
        heap.pop();
        total -= worst.value;
        total_err -= worst.err;
        if (worst.b - worst.a < width_floor) {
            total += worst.value;
            frozen_err += worst.err;
            continue;
        }
        double mid = 0.5 * (worst.a + worst.b);
        Panel l = eval_panel(f, worst.a, mid);
        Panel r = eval_panel(f, mid, worst.b);
        total += l.value + r.value;
        total_err += l.err + r.err;
        heap.push(l);
        heap.push(r);
        ++n_panels;
    }
    if (total_err + frozen_err > target())
        throw QuadratureFailure("adaptive_integrate: tolerance unreachable (panels near width floor)");
    return {total, total_err + frozen_err, n_panels};
}

} // namespace cgemev
