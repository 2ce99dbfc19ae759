#include "cgemev/estimators.hpp"
#include "cgemev/mc.hpp"
#include "cgemev/quadrature.hpp"
#include "cgemev/rng.hpp"
#include "cgemev/simulate.hpp"
#include "cgemev/spectral.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace cgemev;

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

Eigen::VectorXd read_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open input " + path);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t last = line.find_last_of(',');
        const std::string field = (last == std::string::npos) ? line : line.substr(last + 1);
        try {
            values.push_back(std::stod(field));
        } catch (...) {
            continue; // header line
        }
    }
    if (values.size() < 2) throw Error("input series too short: " + path);
    Eigen::VectorXd y(static_cast<int>(values.size()));
    for (int i = 0; i < y.size(); ++i) y(i) = values[static_cast<std::size_t>(i)];
    return y;
}

nlohmann::json result_json(const EstimateResult& r) {
    return {{"method", r.method},
            {"b_hat", r.b_hat},
            {"theta_hat", r.theta_hat},
            {"c_hat", r.c_hat},
            {"converged", r.converged},
            {"iterations", r.iterations},
            {"boundary_hit", r.boundary_hit},
            {"multiple_roots", r.multiple_roots},
            {"ev_negative", r.ev_negative},
            {"seed", r.seed}};
}

nlohmann::json report_json(const AsymptoticReport& r) {
    return {{"nu", r.nu},
            {"b0", r.b0},
            {"theta0", r.theta0},
            {"delta", r.delta},
            {"functionals",
             {{"int_a2", r.functionals.int_a2},
              {"int_a", r.functionals.int_a},
              {"int_a2_h", r.functionals.int_a2_h},
              {"int_a2_h2", r.functionals.int_a2_h2},
              {"int_a2_hc2", r.functionals.int_a2_hc2},
              {"int_ainv2_g2", r.functionals.int_ainv2_g2},
              {"mass_g", r.functionals.mass_g},
              {"j_h0", r.functionals.j_h0},
              {"j_g_over_a2", r.functionals.j_g_over_a2}}},
            {"sigma1_sq", r.ml.sigma1_sq},
            {"sigma12", r.ml.sigma12},
            {"sigma2_sq", r.ml.sigma2_sq},
            {"v1", r.gev.v1},
            {"v12", r.gev.v12},
            {"v2", r.gev.v2},
            {"sigma3_sq", r.sigma3_sq},
            {"v3", r.v3},
            {"var_theta_ml0", r.var_theta_ml0},
            {"var_theta_ge0", r.var_theta_ge0},
            {"sigma4_sq", r.sigma4_sq},
            {"I0", r.I0},
            {"I1", r.I1},
            {"I2", r.I2},
            {"I3", r.I3},
            {"I4", r.I4},
            {"ineff_nu", r.ineff_nu}};
}

int run(int argc, char** argv) {
    CLI::App app{"CGEM-EV estimation for Matern time series with a known nugget"};
    app.require_subcommand(1);

    // ---- ineff ----
    auto* ineff_cmd = app.add_subcommand("ineff", "closed-form ineff(nu) limits");
    std::string ineff_nus = "0.5";
    ineff_cmd->add_option("--nu", ineff_nus, "comma-separated nu values");

    // ---- asymptotics ----
    auto* asym = app.add_subcommand("asymptotics", "asymptotic covariances and inefficiencies");
    double a_nu = 0.5, a_b0 = 1.0, a_theta0 = 1.0, a_delta = 0.01, a_tol = 1e-12;
    bool a_table = false, a_dump = false;
    std::string a_nu_list = "0.5,1,1.5,2.5", a_delta_list = "0.1,0.03,0.01,0.003";
    std::string a_out;
    int a_points = 257;
    asym->add_option("--nu", a_nu);
    asym->add_option("--b0", a_b0);
    asym->add_option("--theta0", a_theta0);
    asym->add_option("--delta", a_delta);
    asym->add_option("--tol", a_tol);
    asym->add_flag("--table", a_table, "emit the Table 4.1 reproduction grid as CSV");
    asym->add_option("--nu-list", a_nu_list);
    asym->add_option("--delta-list", a_delta_list);
    asym->add_flag("--dump-spectrum", a_dump, "CSV: lambda,g_unaliased,g_aliased,filter,h");
    asym->add_option("--points", a_points, "spectrum dump resolution");
    asym->add_option("--out", a_out, "output file (default stdout)");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "draw z ~ N(0, b0 R) and y = z + noise");
    double s_nu = 0.5, s_b0 = 1.0, s_theta0 = 1.0, s_delta = 0.01;
    int s_n = 2000;
    std::uint64_t s_seed = 1;
    std::string s_method = "auto", s_out, s_binary;
    sim->add_option("--nu", s_nu);
    sim->add_option("--b0", s_b0);
    sim->add_option("--theta0", s_theta0);
    sim->add_option("--delta", s_delta);
    sim->add_option("--n", s_n);
    sim->add_option("--seed", s_seed);
    sim->add_option("--method", s_method, "auto|circulant|dense");
    sim->add_option("--out", s_out, "CSV output: index,z,y");
    sim->add_option("--binary", s_binary, "binary output (MCGEV001 header)");

    // ---- estimate ----
    auto* est = app.add_subcommand("estimate", "fit parameters from a series");
    std::string e_method = "gev", e_input, e_box, e_diag;
    double e_nu = 0.5, e_delta = 0.01, e_b0 = 0.0, e_c0 = 0.0;
    est->add_option("--method", e_method, "ev|gev|ml|ml0|ge0|mlc|hybrid")->required();
    est->add_option("--input", e_input, "CSV input; last column is y")->required();
    est->add_option("--nu", e_nu);
    est->add_option("--delta", e_delta);
    est->add_option("--b0", e_b0, "fixed b for ml0/ge0");
    est->add_option("--c0", e_c0, "fixed microergodic constant for mlc");
    est->add_option("--box", e_box, "b_lo,b_hi,theta_lo,theta_hi");
    est->add_option("--dump-diagnostics", e_diag, "CSV: theta,trace_a,quad_form,statistic");

    // ---- mc-compare ----
    auto* mc = app.add_subcommand("mc-compare", "Monte Carlo study vs quadrature predictions");
    std::string m_config, m_prefix;
    int m_threads = 0;
    mc->add_option("--config", m_config, "flat key=value config file")->required();
    mc->add_option("--out-prefix", m_prefix, "override output prefix");
    mc->add_option("--threads", m_threads, "override parallelism degree");

    CLI11_PARSE(app, argc, argv);

    std::ostream* out = &std::cout;
    std::ofstream file_out;

    if (ineff_cmd->parsed()) {
        for (double nu : parse_list(ineff_nus))
            std::printf("ineff(%g) = %.12f\n", nu, ineff_closed_form(nu));
        return 0;
    }

    if (asym->parsed()) {
        if (!a_out.empty()) {
            file_out.open(a_out);
            if (!file_out) throw Error("cannot open output " + a_out);
            out = &file_out;
        }
        if (a_dump) {
            const ModelParams p(a_nu, a_b0, a_theta0, a_delta);
            const AliasedDensity dens(a_nu, p.alpha());
            *out << "lambda,g_unaliased,g_aliased,filter,h\n";
            for (int i = 0; i < a_points; ++i) {
                const double lam = -kPi + kTwoPi * i / (a_points - 1);
                double g, dg;
                dens.eval(lam, &g, &dg);
                const double gs = spectral_density_unaliased(a_nu, p.alpha(), lam);
                const double a = a_b0 * g / (a_b0 * g + 1.0 / kTwoPi);
                char buf[200];
                std::snprintf(buf, sizeof(buf), "%.10g,%.12g,%.12g,%.12g,%.12g\n", lam, gs, g, a,
                              a_delta * dg / g);
                *out << buf;
            }
            return 0;
        }
        if (a_table) {
            const auto rows =
                inefficiency_table(parse_list(a_nu_list), parse_list(a_delta_list), a_b0, a_theta0, a_tol);
            *out << "nu,delta,I0,I1,I2,I3,I4,ineff_limit\n";
            for (const auto& r : rows) {
                if (!r.ok) {
                    *out << r.nu << ',' << r.delta << ",,,,,," << r.ineff_limit << " # " << r.error
                         << "\n";
                    continue;
                }
                char buf[300];
                std::snprintf(buf, sizeof(buf), "%g,%g,%.8f,%.8f,%.8f,%.8f,%.8f,%.8f\n", r.nu,
                              r.delta, r.I0, r.I1, r.I2, r.I3, r.I4, r.ineff_limit);
                *out << buf;
            }
            return 0;
        }
        const AsymptoticReport r = asymptotic_report(ModelParams(a_nu, a_b0, a_theta0, a_delta), a_tol);
        *out << report_json(r).dump(2) << "\n";
        return 0;
    }

    if (sim->parsed()) {
        SimulationSpec spec{ModelParams(s_nu, s_b0, s_theta0, s_delta), s_n, s_seed,
                            SimMethod::automatic};
        if (s_method == "circulant") spec.method = SimMethod::circulant;
        else if (s_method == "dense") spec.method = SimMethod::dense;
        else if (s_method != "auto") throw Error("unknown --method " + s_method);

        const Eigen::VectorXd z = simulate_signal(spec);
        std::mt19937_64 gen = rng::make(spec.seed, 0, rng::Stream::noise);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd y(s_n);
        for (int i = 0; i < s_n; ++i) y(i) = z(i) + normal(gen);

        if (!s_out.empty()) {
            std::ofstream f(s_out);
            if (!f) throw Error("cannot open output " + s_out);
            f << "index,z,y\n";
            for (int i = 0; i < s_n; ++i) {
                char buf[120];
                std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", i, z(i), y(i));
                f << buf;
            }
        }
        if (!s_binary.empty()) {
            std::ofstream f(s_binary, std::ios::binary);
            if (!f) throw Error("cannot open output " + s_binary);
            f.write("MCGEV001", 8);
            const std::uint64_t n64 = static_cast<std::uint64_t>(s_n);
            f.write(reinterpret_cast<const char*>(&n64), 8);
            f.write(reinterpret_cast<const char*>(z.data()), s_n * 8);
            f.write(reinterpret_cast<const char*>(y.data()), s_n * 8);
        }
        if (s_out.empty() && s_binary.empty())
            std::printf("simulated n=%d (write with --out/--binary)\n", s_n);
        return 0;
    }

    if (est->parsed()) {
        const Eigen::VectorXd y = read_series(e_input);
        SearchBox box = SearchBox::around(std::max(ev_variance(y), 0.5), 1.0 / (e_delta * 20.0), 100.0);
        if (!e_box.empty()) {
            const auto v = parse_list(e_box);
            if (v.size() != 4) throw Error("--box needs b_lo,b_hi,theta_lo,theta_hi");
            box.b_lo = v[0];
            box.b_hi = v[1];
            box.theta_lo = v[2];
            box.theta_hi = v[3];
        }
        std::vector<CgemDiagnostic> diag;
        std::vector<CgemDiagnostic>* diag_ptr = e_diag.empty() ? nullptr : &diag;

        EstimateResult r;
        if (e_method == "ev") {
            bool neg = false;
            r.method = "ev";
            r.b_hat = ev_variance(y, &neg);
            r.ev_negative = neg;
            r.converged = true;
        } else if (e_method == "gev") {
            bool neg = false;
            const double b_ev = ev_variance(y, &neg);
            if (neg) throw EVNegative("b_EV <= 0; cannot run the CGEM root solve");
            r = solve_cgem(b_ev, y, e_nu, e_delta, box, diag_ptr);
            r.method = "gev";
        } else if (e_method == "ml") {
            r = ml_estimate(y, e_nu, e_delta, box);
        } else if (e_method == "ml0") {
            if (!(e_b0 > 0)) throw Error("ml0 requires --b0");
            r = ml_fixed_b(y, e_b0, e_nu, e_delta, box);
        } else if (e_method == "ge0") {
            if (!(e_b0 > 0)) throw Error("ge0 requires --b0");
            r = solve_cgem(e_b0, y, e_nu, e_delta, box, diag_ptr);
            r.method = "ge0";
        } else if (e_method == "mlc") {
            if (!(e_c0 > 0)) throw Error("mlc requires --c0");
            r = ml_fixed_c(y, e_c0, e_nu, e_delta, box);
        } else if (e_method == "hybrid") {
            r = hybrid_estimate(y, e_nu, e_delta, box);
        } else {
            throw Error("unknown --method " + e_method);
        }
        if (!e_diag.empty()) {
            std::ofstream f(e_diag);
            f << "theta,trace_a,quad_form,statistic\n";
            for (const auto& d : diag) {
                char buf[160];
                std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g\n", d.theta, d.trace_a,
                              d.quad_form, d.statistic);
                f << buf;
            }
        }
        std::cout << result_json(r).dump(2) << "\n";
        return 0;
    }

    if (mc->parsed()) {
        ExperimentConfig cfg = parse_config_file(m_config);
        if (!m_prefix.empty()) cfg.out_prefix = m_prefix;
        if (m_threads > 0) cfg.threads = m_threads;
        std::vector<ReplicateRow> rows;
        ExperimentSummary summary = run_experiment(cfg, &rows);
        const AsymptoticReport report =
            asymptotic_report(ModelParams(cfg.nu, cfg.b0, cfg.theta0, cfg.delta));
        compare_report(summary, rows, report);
        if (!cfg.out_prefix.empty()) {
            std::ofstream js(cfg.out_prefix + "_summary.json");
            js << summary_json(summary);
        }
        std::cout << summary_text(summary);
        bool all_pass = summary.ok;
        for (const auto& rc : summary.ratios) all_pass = all_pass && rc.pass;
        return all_pass ? 0 : 1;
    }

    return 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::Error&) {
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
