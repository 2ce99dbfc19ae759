#include "cgemev/mc.hpp"

#include "cgemev/rng.hpp"
#include "cgemev/simulate.hpp"

#include <json.hpp>

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace cgemev {

void ExperimentConfig::validate() const {
    ModelParams check(nu, b0, theta0, delta);
    if (replicates < 2) throw Error("ExperimentConfig: replicates must be >= 2");
    if (n < 2) throw Error("ExperimentConfig: n must be >= 2");
    if (estimators.empty()) throw Error("ExperimentConfig: estimator set is empty");
    if (!(box_factor > 1.0)) throw Error("ExperimentConfig: box_factor must be > 1");
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    std::size_t b = s.find_last_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("parse_config_file: cannot open " + path);
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("parse_config_file: expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "nu") cfg.nu = std::stod(value);
        else if (key == "b0") cfg.b0 = std::stod(value);
        else if (key == "theta0") cfg.theta0 = std::stod(value);
        else if (key == "delta") cfg.delta = std::stod(value);
        else if (key == "n") cfg.n = std::stoi(value);
        else if (key == "replicates") cfg.replicates = std::stoi(value);
        else if (key == "master_seed") cfg.master_seed = std::stoull(value);
        else if (key == "estimators") cfg.estimators = split_list(value);
        else if (key == "box_factor") cfg.box_factor = std::stod(value);
        else if (key == "threads") cfg.threads = std::stoi(value);
        else if (key == "out_prefix") cfg.out_prefix = value;
        else throw Error("parse_config_file: unknown key '" + key + "'");
    }
    return cfg;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "nu=" << format_double(cfg.nu) << ";b0=" << format_double(cfg.b0)
       << ";theta0=" << format_double(cfg.theta0) << ";delta=" << format_double(cfg.delta)
       << ";n=" << cfg.n << ";replicates=" << cfg.replicates << ";seed=" << cfg.master_seed
       << ";box=" << format_double(cfg.box_factor) << ";est=";
    for (const auto& e : cfg.estimators) os << e << ",";
    std::uint64_t h = 14695981039346656037ULL;
    for (char c : os.str()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MCGEV_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

ReplicateRow make_row(int rep, std::uint64_t seed, const std::string& method,
                      const EstimateResult& r) {
    ReplicateRow row;
    row.replicate = rep;
    row.seed = seed;
    row.method = method;
    row.b_hat = r.b_hat;
    row.theta_hat = r.theta_hat;
    row.c_hat = r.c_hat;
    row.converged = r.converged;
    row.boundary_hit = r.boundary_hit;
    return row;
}

ReplicateRow failed_row(int rep, std::uint64_t seed, const std::string& method) {
    ReplicateRow row;
    row.replicate = rep;
    row.seed = seed;
    row.method = method;
    row.b_hat = std::numeric_limits<double>::quiet_NaN();
    row.theta_hat = std::numeric_limits<double>::quiet_NaN();
    row.c_hat = std::numeric_limits<double>::quiet_NaN();
    row.converged = false;
    row.boundary_hit = false;
    return row;
}

} // namespace

ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::vector<ReplicateRow>* raw_out) {
    cfg.validate();
    const ModelParams params0(cfg.nu, cfg.b0, cfg.theta0, cfg.delta);
    const SearchBox box = SearchBox::around(cfg.b0, cfg.theta0, cfg.box_factor);
    const double c0 = params0.microergodic();
    const SignalSampler sampler(params0, cfg.n);

    const std::size_t n_methods = cfg.estimators.size();
    std::vector<ReplicateRow> rows(static_cast<std::size_t>(cfg.replicates) * n_methods);

    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string failure_message;
    std::mutex failure_mutex;

    auto worker = [&]() {
        for (;;) {
            const int rep = next.fetch_add(1);
            if (rep >= cfg.replicates || failed.load()) break;
            try {
                const std::uint64_t rep_seed =
                    rng::derive_seed(cfg.master_seed, static_cast<std::uint64_t>(rep),
                                     rng::Stream::signal);
                Eigen::VectorXd z = sampler.draw(cfg.master_seed, static_cast<std::uint64_t>(rep));
                std::mt19937_64 gen =
                    rng::make(cfg.master_seed, static_cast<std::uint64_t>(rep), rng::Stream::noise);
                std::normal_distribution<double> normal(0.0, 1.0);
                Eigen::VectorXd y(cfg.n);
                for (int i = 0; i < cfg.n; ++i) y(i) = z(i) + normal(gen);

                bool ev_neg = false;
                const double b_ev = ev_variance(y, &ev_neg);

                for (std::size_t m = 0; m < n_methods; ++m) {
                    const std::string& method = cfg.estimators[m];
                    const std::size_t slot = static_cast<std::size_t>(rep) * n_methods + m;
                    try {
                        EstimateResult r;
                        if (method == "ev") {
                            r.method = "ev";
                            r.b_hat = b_ev;
                            r.converged = true;
                            r.ev_negative = ev_neg;
                        } else if (method == "gev") {
                            if (ev_neg) throw EVNegative("b_EV <= 0");
                            r = solve_cgem(b_ev, y, cfg.nu, cfg.delta, box);
                            r.method = "gev";
                        } else if (method == "ml") {
                            r = ml_estimate(y, cfg.nu, cfg.delta, box);
                        } else if (method == "ml0") {
                            r = ml_fixed_b(y, cfg.b0, cfg.nu, cfg.delta, box);
                        } else if (method == "ge0") {
                            r = solve_cgem(cfg.b0, y, cfg.nu, cfg.delta, box);
                            r.method = "ge0";
                        } else if (method == "mlc") {
                            r = ml_fixed_c(y, c0, cfg.nu, cfg.delta, box);
                        } else if (method == "hybrid") {
                            r = hybrid_estimate(y, cfg.nu, cfg.delta, box);
                        } else {
                            throw Error("run_experiment: unknown estimator '" + method + "'");
                        }
                        rows[slot] = make_row(rep, rep_seed, method, r);
                    } catch (const EVNegative&) {
                        rows[slot] = failed_row(rep, rep_seed, method);
                    } catch (const NoSignChange&) {
                        rows[slot] = failed_row(rep, rep_seed, method);
                    } catch (const OptimizerStalled&) {
                        rows[slot] = failed_row(rep, rep_seed, method);
                    }
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failure_message = e.what();
                failed.store(true);
            }
        }
    };

    const int n_threads = std::min(resolve_threads(cfg.threads), cfg.replicates);
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) throw Error("run_experiment: replicate failed: " + failure_message);

    if (!cfg.out_prefix.empty()) {
        std::ofstream raw(cfg.out_prefix + "_raw.csv");
        if (!raw) throw Error("run_experiment: cannot write raw table");
        raw << raw_table_csv(rows);
    }
    ExperimentSummary summary = summarize(cfg, rows);
    if (!cfg.out_prefix.empty()) {
        std::ofstream js(cfg.out_prefix + "_summary.json");
        js << summary_json(summary);
    }
    if (raw_out) *raw_out = std::move(rows);
    return summary;
}

namespace {

Moments moments_of(const std::vector<double>& values, double truth) {
    Moments m;
    const std::size_t k = values.size();
    if (k == 0) return m;
    double s = 0;
    for (double v : values) s += v;
    m.mean = s / static_cast<double>(k);
    m.bias = m.mean - truth;
    double ss = 0, mse = 0, mse2 = 0;
    for (double v : values) {
        ss += (v - m.mean) * (v - m.mean);
        const double e = (v - truth) * (v - truth);
        mse += e;
        mse2 += e * e;
    }
    m.var = (k > 1) ? ss / static_cast<double>(k - 1) : 0.0;
    m.mse = mse / static_cast<double>(k);
    if (k > 1) {
        const double var_e = (mse2 - mse * mse / static_cast<double>(k)) / static_cast<double>(k - 1);
        m.se_mse = std::sqrt(std::max(var_e, 0.0) / static_cast<double>(k));
    }
    return m;
}

} // namespace

ExperimentSummary summarize(const ExperimentConfig& cfg, const std::vector<ReplicateRow>& rows) {
    ExperimentSummary summary;
    summary.config = cfg;
    summary.hash = config_hash(cfg);
    const double c0 = cfg.b0 * std::pow(cfg.theta0, 2.0 * cfg.nu);

    int total = 0, excluded = 0;
    for (const auto& method : cfg.estimators) {
        MethodStats st;
        st.method = method;
        std::vector<double> bs, ts, cs;
        for (const auto& row : rows) {
            if (row.method != method) continue;
            ++st.attempted;
            ++total;
            if (!row.converged) {
                ++st.excluded;
                ++excluded;
                continue;
            }
            ++st.used;
            if (std::isfinite(row.b_hat)) bs.push_back(row.b_hat);
            if (std::isfinite(row.theta_hat)) ts.push_back(row.theta_hat);
            if (std::isfinite(row.c_hat)) cs.push_back(row.c_hat);
        }
        st.b = moments_of(bs, cfg.b0);
        st.theta = moments_of(ts, cfg.theta0);
        st.c = moments_of(cs, c0);
        summary.methods.push_back(st);
    }
    summary.exclusion_rate = (total > 0) ? static_cast<double>(excluded) / total : 0.0;
    summary.ok = summary.exclusion_rate <= 0.10;
    return summary;
}

std::string raw_table_csv(const std::vector<ReplicateRow>& rows) {
    std::ostringstream os;
    os << "replicate,seed,method,b_hat,theta_hat,c_hat,converged,boundary_hit\n";
    for (const auto& r : rows) {
        os << r.replicate << ',' << r.seed << ',' << r.method << ',' << format_double(r.b_hat)
           << ',' << format_double(r.theta_hat) << ',' << format_double(r.c_hat) << ','
           << (r.converged ? 1 : 0) << ',' << (r.boundary_hit ? 1 : 0) << '\n';
    }
    return os.str();
}

namespace {

// Paired squared errors (or centered squares for variance ratios) over the
// replicates where both methods converged.
struct Paired {
    std::vector<double> num, den;
};

double row_value(const ReplicateRow& r, const std::string& parameter) {
    if (parameter == "b") return r.b_hat;
    if (parameter == "theta") return r.theta_hat;
    return r.c_hat;
}

Paired paired_errors(const std::vector<ReplicateRow>& rows, const std::string& m_num,
                     const std::string& m_den, const std::string& parameter, double truth,
                     bool variance) {
    std::map<int, std::pair<const ReplicateRow*, const ReplicateRow*>> by_rep;
    for (const auto& r : rows) {
        if (r.method == m_num) by_rep[r.replicate].first = &r;
        if (r.method == m_den) by_rep[r.replicate].second = &r;
    }
    std::vector<double> vn, vd;
    for (const auto& [rep, pr] : by_rep) {
        if (!pr.first || !pr.second || !pr.first->converged || !pr.second->converged) continue;
        vn.push_back(row_value(*pr.first, parameter));
        vd.push_back(row_value(*pr.second, parameter));
    }
    Paired out;
    double mn = 0, md = 0;
    for (std::size_t i = 0; i < vn.size(); ++i) {
        mn += vn[i];
        md += vd[i];
    }
    if (!vn.empty()) {
        mn /= static_cast<double>(vn.size());
        md /= static_cast<double>(vd.size());
    }
    const double cn = variance ? mn : truth;
    const double cd = variance ? md : truth;
    for (std::size_t i = 0; i < vn.size(); ++i) {
        out.num.push_back((vn[i] - cn) * (vn[i] - cn));
        out.den.push_back((vd[i] - cd) * (vd[i] - cd));
    }
    return out;
}

RatioCheck ratio_check(const std::vector<ReplicateRow>& rows, const std::string& name,
                       const std::string& m_num, const std::string& m_den,
                       const std::string& parameter, double truth, bool variance,
                       double predicted) {
    RatioCheck rc;
    rc.name = name;
    rc.parameter = parameter;
    rc.numerator = m_num;
    rc.denominator = m_den;
    rc.use_variance = variance;
    rc.predicted = predicted;
    const Paired p = paired_errors(rows, m_num, m_den, parameter, truth, variance);
    const std::size_t k = p.num.size();
    if (k < 2) return rc;
    double me = 0, mf = 0;
    for (std::size_t i = 0; i < k; ++i) {
        me += p.num[i];
        mf += p.den[i];
    }
    me /= static_cast<double>(k);
    mf /= static_cast<double>(k);
    double vee = 0, vff = 0, vef = 0;
    for (std::size_t i = 0; i < k; ++i) {
        vee += (p.num[i] - me) * (p.num[i] - me);
        vff += (p.den[i] - mf) * (p.den[i] - mf);
        vef += (p.num[i] - me) * (p.den[i] - mf);
    }
    vee /= static_cast<double>(k - 1);
    vff /= static_cast<double>(k - 1);
    vef /= static_cast<double>(k - 1);
    rc.empirical = me / mf;
    const double rel_var =
        (vee / (me * me) + vff / (mf * mf) - 2.0 * vef / (me * mf)) / static_cast<double>(k);
    rc.se = std::abs(rc.empirical) * std::sqrt(std::max(rel_var, 0.0));
    if (rc.se > 0.0) {
        rc.zscore = (rc.empirical - rc.predicted) / rc.se;
        rc.pass = std::abs(rc.zscore) < 3.0;
    } else {
        rc.pass = std::abs(rc.empirical - rc.predicted) <= 1e-12 * std::max(1.0, std::abs(rc.predicted));
        rc.zscore = rc.pass ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return rc;
}

bool has_method(const ExperimentConfig& cfg, const std::string& m) {
    for (const auto& e : cfg.estimators)
        if (e == m) return true;
    return false;
}

} // namespace

void compare_report(ExperimentSummary& summary, const std::vector<ReplicateRow>& rows,
                    const AsymptoticReport& report) {
    const ExperimentConfig& cfg = summary.config;
    if (std::abs(report.nu - cfg.nu) > 1e-12 || std::abs(report.b0 - cfg.b0) > 1e-12 ||
        std::abs(report.theta0 - cfg.theta0) > 1e-12 || std::abs(report.delta - cfg.delta) > 1e-12)
        throw MismatchedConfig("compare_report: report parameters disagree with the experiment");

    const double c0 = cfg.b0 * std::pow(cfg.theta0, 2.0 * cfg.nu);
    summary.ratios.clear();
    if (has_method(cfg, "gev") && has_method(cfg, "ml")) {
        summary.ratios.push_back(
            ratio_check(rows, "mse_b_gev_over_ml", "gev", "ml", "b", cfg.b0, false, report.I1));
        summary.ratios.push_back(ratio_check(rows, "mse_theta_gev_over_ml", "gev", "ml", "theta",
                                             cfg.theta0, false, report.I2));
        summary.ratios.push_back(
            ratio_check(rows, "mse_c_gev_over_ml", "gev", "ml", "c", c0, false, report.I3));
    }
    if (has_method(cfg, "ge0") && has_method(cfg, "ml0"))
        summary.ratios.push_back(ratio_check(rows, "var_theta_ge0_over_ml0", "ge0", "ml0", "theta",
                                             cfg.theta0, true, report.I0));
    if (has_method(cfg, "ev") && has_method(cfg, "mlc"))
        summary.ratios.push_back(
            ratio_check(rows, "mse_b_ev_over_mlc", "ev", "mlc", "b", cfg.b0, false, report.I4));
    if (has_method(cfg, "hybrid") && has_method(cfg, "gev"))
        summary.ratios.push_back(ratio_check(rows, "mse_theta_hybrid_over_gev", "hybrid", "gev",
                                             "theta", cfg.theta0, false, 1.0));
}

namespace {

nlohmann::json moments_json(const Moments& m) {
    return {{"mean", m.mean}, {"bias", m.bias}, {"var", m.var}, {"mse", m.mse},
            {"se_mse", m.se_mse}};
}

} // namespace

std::string summary_json(const ExperimentSummary& s) {
    nlohmann::json j;
    j["config"] = {{"nu", s.config.nu},     {"b0", s.config.b0},
                   {"theta0", s.config.theta0}, {"delta", s.config.delta},
                   {"n", s.config.n},       {"replicates", s.config.replicates},
                   {"master_seed", s.config.master_seed},
                   {"estimators", s.config.estimators}};
    j["config_hash"] = s.hash;
    j["exclusion_rate"] = s.exclusion_rate;
    j["ok"] = s.ok;
    j["methods"] = nlohmann::json::array();
    for (const auto& m : s.methods) {
        j["methods"].push_back({{"method", m.method},
                                {"attempted", m.attempted},
                                {"used", m.used},
                                {"excluded", m.excluded},
                                {"b", moments_json(m.b)},
                                {"theta", moments_json(m.theta)},
                                {"c", moments_json(m.c)}});
    }
    j["ratios"] = nlohmann::json::array();
    for (const auto& r : s.ratios) {
        j["ratios"].push_back({{"name", r.name},
                               {"parameter", r.parameter},
                               {"empirical", r.empirical},
                               {"se", r.se},
                               {"predicted", r.predicted},
                               {"zscore", r.zscore},
                               {"pass", r.pass}});
    }
    return j.dump(2);
}

std::string summary_text(const ExperimentSummary& s) {
    std::ostringstream os;
    os << "experiment nu=" << s.config.nu << " b0=" << s.config.b0 << " theta0=" << s.config.theta0
       << " delta=" << s.config.delta << " n=" << s.config.n << " reps=" << s.config.replicates
       << " hash=" << s.hash << "\n";
    os << "exclusion rate " << s.exclusion_rate * 100.0 << "%"
       << (s.ok ? "" : "  (FAIL: above 10%)") << "\n";
    for (const auto& m : s.methods) {
        os << "  " << m.method << ": used " << m.used << "/" << m.attempted
           << "  mse(b)=" << m.b.mse << "  mse(theta)=" << m.theta.mse << "  mse(c)=" << m.c.mse
           << "\n";
    }
    for (const auto& r : s.ratios) {
        os << "  " << r.name << ": empirical " << r.empirical << " +- " << r.se << "  predicted "
           << r.predicted << "  z=" << r.zscore << "  " << (r.pass ? "pass" : "FAIL") << "\n";
    }
    return os.str();
}

PsiExperimentResult psi_experiment(const ExperimentConfig& cfg, double b, double theta) {
    cfg.validate();
    const ModelParams params0(cfg.nu, cfg.b0, cfg.theta0, cfg.delta);
    const SignalSampler sampler(params0, cfg.n);
    const CorrelationKernel kernel = build_kernel(ModelParams(cfg.nu, b, theta, cfg.delta), cfg.n);
    const FilterOperator op(b, kernel);
    const double tr = op.trace();

    std::vector<double> stats(static_cast<std::size_t>(cfg.replicates), 0.0);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int rep = next.fetch_add(1);
            if (rep >= cfg.replicates) break;
            Eigen::VectorXd z = sampler.draw(cfg.master_seed, static_cast<std::uint64_t>(rep));
            std::mt19937_64 gen =
                rng::make(cfg.master_seed, static_cast<std::uint64_t>(rep), rng::Stream::noise);
            std::normal_distribution<double> normal(0.0, 1.0);
            Eigen::VectorXd y(cfg.n);
            for (int i = 0; i < cfg.n; ++i) y(i) = z(i) + normal(gen);
            const Eigen::VectorXd u = op.solve_m(y);
            const double quad = y.dot(u) - u.squaredNorm();
            stats[static_cast<std::size_t>(rep)] = quad / tr - 1.0;
        }
    };
    const int n_threads = std::min(resolve_threads(cfg.threads), cfg.replicates);
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    PsiExperimentResult out;
    out.replicates = cfg.replicates;
    double s = 0;
    for (double v : stats) s += v;
    out.mean = s / static_cast<double>(cfg.replicates);
    double ss = 0;
    for (double v : stats) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / (static_cast<double>(cfg.replicates - 1) * cfg.replicates));
    return out;
}

} // namespace cgemev
