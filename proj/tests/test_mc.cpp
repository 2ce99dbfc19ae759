#include "cgemev/mc.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace cgemev;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.nu = 0.5;
    cfg.b0 = 1.0;
    cfg.theta0 = 1.0;
    cfg.delta = 0.05;
    cfg.n = 256;
    cfg.replicates = 30;
    cfg.master_seed = 424242;
    cfg.estimators = {"ev", "gev", "ge0"};
    return cfg;
}

} // namespace

TEST_CASE("determinism across parallelism degrees") {
    ExperimentConfig cfg = small_config();
    cfg.threads = 1;
    std::vector<ReplicateRow> rows1, rows2, rows3;
    run_experiment(cfg, &rows1);
    cfg.threads = 2;
    run_experiment(cfg, &rows2);
    cfg.threads = 3;
    run_experiment(cfg, &rows3);
    CHECK(raw_table_csv(rows1) == raw_table_csv(rows2));
    CHECK(raw_table_csv(rows1) == raw_table_csv(rows3));
}

TEST_CASE("raw table schema is stable") {
    std::vector<ReplicateRow> rows;
    const std::string csv = raw_table_csv(rows);
    CHECK(csv == "replicate,seed,method,b_hat,theta_hat,c_hat,converged,boundary_hit\n");
}

TEST_CASE("summary is exactly recomputable from the raw table") {
    ExperimentConfig cfg = small_config();
    cfg.threads = 2;
    std::vector<ReplicateRow> rows;
    const ExperimentSummary s1 = run_experiment(cfg, &rows);
    const ExperimentSummary s2 = summarize(cfg, rows);
    REQUIRE(s1.methods.size() == s2.methods.size());
    for (std::size_t i = 0; i < s1.methods.size(); ++i) {
        CHECK(s1.methods[i].used == s2.methods[i].used);
        CHECK(s1.methods[i].b.mse == s2.methods[i].b.mse);
        CHECK(s1.methods[i].theta.mse == s2.methods[i].theta.mse);
        CHECK(s1.methods[i].theta.var == s2.methods[i].theta.var);
    }
    CHECK(s1.hash == s2.hash);
}

TEST_CASE("compare_report wiring and synthetic ratios") {
    ExperimentConfig cfg = small_config();
    cfg.estimators = {"gev", "ml"};
    cfg.replicates = 4;

    // synthetic rows: gev theta errors exactly double the ml ones
    std::vector<ReplicateRow> rows;
    for (int rep = 0; rep < 4; ++rep) {
        const double e = 0.01 * (rep + 1);
        ReplicateRow g{rep, 0, "gev", 1.0, 1.0 + 2.0 * e, 1.0, true, false};
        ReplicateRow m{rep, 0, "ml", 1.0, 1.0 + e, 1.0, true, false};
        rows.push_back(g);
        rows.push_back(m);
    }
    ExperimentSummary summary = summarize(cfg, rows);

    AsymptoticReport report;
    report.nu = cfg.nu;
    report.b0 = cfg.b0;
    report.theta0 = cfg.theta0;
    report.delta = cfg.delta;
    report.I1 = 1.0;
    report.I2 = 4.0; // exact ratio of the synthetic squared errors
    report.I3 = 1.0;
    compare_report(summary, rows, report);

    const RatioCheck* theta_ratio = nullptr;
    for (const auto& rc : summary.ratios)
        if (rc.name == "mse_theta_gev_over_ml") theta_ratio = &rc;
    REQUIRE(theta_ratio != nullptr);
    CHECK(theta_ratio->empirical == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(theta_ratio->pass); // predicted exactly 4

    report.I2 = 1.0; // now the prediction is wrong and the SE is ~0
    compare_report(summary, rows, report);
    for (const auto& rc : summary.ratios)
        if (rc.name == "mse_theta_gev_over_ml") CHECK(!rc.pass);

    report.delta = 0.99;
    CHECK_THROWS_AS(compare_report(summary, rows, report), MismatchedConfig);
}

TEST_CASE("config file parsing and hashing") {
    const std::string path = "/tmp/cgemev_test_config.txt";
    {
        std::ofstream f(path);
        f << "# comment line\n"
          << "nu = 1.5\n"
          << "b0 = 2.0\n"
          << "theta0 = 0.5\n"
          << "delta = 0.03\n"
          << "n = 512\n"
          << "replicates = 10\n"
          << "master_seed = 99\n"
          << "estimators = ev, gev\n"
          << "threads = 2\n";
    }
    const ExperimentConfig cfg = parse_config_file(path);
    CHECK(cfg.nu == 1.5);
    CHECK(cfg.b0 == 2.0);
    CHECK(cfg.n == 512);
    CHECK(cfg.replicates == 10);
    CHECK(cfg.master_seed == 99);
    REQUIRE(cfg.estimators.size() == 2);
    CHECK(cfg.estimators[1] == "gev");
    CHECK(cfg.threads == 2);

    ExperimentConfig other = cfg;
    CHECK(config_hash(cfg) == config_hash(other));
    other.delta = 0.01;
    CHECK(config_hash(cfg) != config_hash(other));

    {
        std::ofstream f(path);
        f << "unknown_key = 3\n";
    }
    CHECK_THROWS_AS(parse_config_file(path), Error);
    std::remove(path.c_str());
}

TEST_CASE("exclusion accounting kicks in for tiny signal") {
    ExperimentConfig cfg;
    cfg.nu = 0.5;
    cfg.b0 = 0.05;
    cfg.theta0 = 1.0;
    cfg.delta = 0.05;
    cfg.n = 128;
    cfg.replicates = 40;
    cfg.master_seed = 7;
    cfg.estimators = {"gev"};
    cfg.threads = 2;
    const ExperimentSummary s = run_experiment(cfg);
    CHECK(s.methods[0].excluded > 0);
    CHECK(s.exclusion_rate > 0.0);
    if (s.exclusion_rate > 0.10) CHECK(!s.ok);
}

TEST_CASE("psi experiment agrees with quadrature psi") {
    ExperimentConfig cfg;
    cfg.nu = 0.5;
    cfg.b0 = 1.0;
    cfg.theta0 = 1.0;
    cfg.delta = 0.02;
    cfg.n = 512;
    cfg.replicates = 60;
    cfg.master_seed = 31415;
    cfg.threads = 2;
    const PsiExperimentResult r = psi_experiment(cfg, 2.0, 1.0);
    const double predicted = psi(cfg.delta, 2.0, 1.0, cfg.b0, cfg.theta0, cfg.nu);
    CHECK(std::abs(r.mean - predicted) < 4.0 * r.se);
}

TEST_CASE("summary json and text render") {
    ExperimentConfig cfg = small_config();
    cfg.replicates = 6;
    cfg.threads = 2;
    std::vector<ReplicateRow> rows;
    ExperimentSummary s = run_experiment(cfg, &rows);
    const std::string js = summary_json(s);
    CHECK(js.find("config_hash") != std::string::npos);
    CHECK(js.find("exclusion_rate") != std::string::npos);
    const std::string txt = summary_text(s);
    CHECK(txt.find("experiment nu=") != std::string::npos);
}
