#include "cgemev/simulate.hpp"

#include "cgemev/rng.hpp"
#include "cgemev/toeplitz.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

using namespace cgemev;

namespace {

struct MomentSummary {
    double mean_var = 0, se_var = 0;   // per-replicate sample variance of z
    double mean_lag1 = 0, se_lag1 = 0; // per-replicate lag-1 autocorrelation
};

MomentSummary replicate_moments(const SignalSampler& sampler, std::uint64_t master, int reps) {
    std::vector<double> vars, lags;
    for (int r = 0; r < reps; ++r) {
        const Eigen::VectorXd z = sampler.draw(master, static_cast<std::uint64_t>(r));
        const int n = static_cast<int>(z.size());
        const double var = z.squaredNorm() / n;
        double lag = 0.0;
        for (int i = 1; i < n; ++i) lag += z(i) * z(i - 1);
        lags.push_back(lag / (n - 1) / var);
        vars.push_back(var);
    }
    auto mean_se = [&](const std::vector<double>& v, double* m, double* se) {
        double s = 0;
        for (double x : v) s += x;
        *m = s / static_cast<double>(v.size());
        double ss = 0;
        for (double x : v) ss += (x - *m) * (x - *m);
        *se = std::sqrt(ss / ((v.size() - 1.0) * v.size()));
    };
    MomentSummary out;
    mean_se(vars, &out.mean_var, &out.se_var);
    mean_se(lags, &out.mean_lag1, &out.se_lag1);
    return out;
}

} // namespace

TEST_CASE("fft matches a naive DFT") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> normal;
    std::vector<std::complex<double>> a(16);
    for (auto& v : a) v = {normal(gen), normal(gen)};
    auto b = a;
    fft_radix2(b, -1);
    for (int k = 0; k < 16; ++k) {
        std::complex<double> acc{0, 0};
        for (int j = 0; j < 16; ++j)
            acc += a[static_cast<std::size_t>(j)] *
                   std::polar(1.0, -kTwoPi * j * k / 16.0);
        CHECK(std::abs(acc - b[static_cast<std::size_t>(k)]) < 1e-12);
    }
    std::vector<std::complex<double>> odd(6);
    CHECK_THROWS_AS(fft_radix2(odd, -1), Error);
}

TEST_CASE("reproducibility and independent substreams") {
    const SimulationSpec spec{ModelParams(0.5, 1.0, 1.0, 0.05), 128, 77, SimMethod::automatic};
    const Eigen::VectorXd z1 = simulate_signal(spec);
    const Eigen::VectorXd z2 = simulate_signal(spec);
    CHECK((z1 - z2).norm() == 0.0);

    // the observation noise comes from an independent substream: z unchanged
    const ObservationSeries obs = simulate_observations(spec);
    const Eigen::VectorXd eps = obs.y - z1;
    CHECK(eps.norm() > 1.0); // noise present
    const ObservationSeries obs2 = simulate_observations(spec);
    CHECK((obs.y - obs2.y).norm() == 0.0);

    // different replicates differ
    const SignalSampler sampler(spec.params0, spec.n);
    CHECK((sampler.draw(77, 0) - sampler.draw(77, 1)).norm() > 1e-3);
}

TEST_CASE("sample variance and lag-1 autocorrelation match the model") {
    const ModelParams p(0.5, 1.0, 1.0, 0.05);
    const SignalSampler sampler(p, 1024);
    CHECK(sampler.used_circulant());
    const MomentSummary m = replicate_moments(sampler, 123, 400);
    CHECK(std::abs(m.mean_var - p.b) < 3.0 * m.se_var);
    CHECK(std::abs(m.mean_lag1 - covariance(p.nu, p.theta, p.delta)) < 4.0 * m.se_lag1);
}

TEST_CASE("circulant and dense samplers agree in distribution") {
    const ModelParams p(1.5, 2.0, 1.0, 0.1);
    const SignalSampler circ(p, 256, SimMethod::circulant);
    const SignalSampler dense(p, 256, SimMethod::dense);
    CHECK(circ.used_circulant());
    CHECK(!dense.used_circulant());
    const MomentSummary mc = replicate_moments(circ, 11, 300);
    const MomentSummary md = replicate_moments(dense, 22, 300);
    const double z_var =
        (mc.mean_var - md.mean_var) / std::hypot(mc.se_var, md.se_var);
    const double z_lag =
        (mc.mean_lag1 - md.mean_lag1) / std::hypot(mc.se_lag1, md.se_lag1);
    CHECK(std::abs(z_var) < 4.0);
    CHECK(std::abs(z_lag) < 4.0);
}

TEST_CASE("whitened draws look standard normal") {
    const ModelParams p(0.5, 1.5, 2.0, 0.1);
    const int n = 256;
    const CorrelationKernel k = build_kernel(p, n);
    Eigen::MatrixXd r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            r(i, j) = p.b * k.first_row[static_cast<std::size_t>(std::abs(i - j))];
    const Eigen::LLT<Eigen::MatrixXd> llt(r);
    const SignalSampler sampler(p, n);

    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    const int reps = 100;
    const double count = static_cast<double>(reps) * n;
    for (int rep = 0; rep < reps; ++rep) {
        const Eigen::VectorXd z = sampler.draw(321, static_cast<std::uint64_t>(rep));
        const Eigen::VectorXd w = llt.matrixL().solve(z);
        for (int i = 0; i < n; ++i) {
            const double x = w(i);
            s1 += x;
            s2 += x * x;
            s3 += x * x * x;
            s4 += x * x * x * x;
        }
    }
    const double mean = s1 / count;
    const double var = s2 / count - mean * mean;
    const double skew = s3 / count;
    const double kurt = s4 / count;
    // moment z-scores at roughly the 1e-3 level
    CHECK(std::abs(mean) < 4.0 / std::sqrt(count));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / count));
    CHECK(std::abs(skew) < 4.0 * std::sqrt(15.0 / count));
    CHECK(std::abs(kurt - 3.0) < 4.0 * std::sqrt(96.0 / count));
}

TEST_CASE("vanishing signal variance leaves pure white noise") {
    const SimulationSpec spec{ModelParams(0.5, 1e-12, 1.0, 0.05), 2048, 9, SimMethod::automatic};
    const ObservationSeries obs = simulate_observations(spec);
    const double var = obs.y.squaredNorm() / 2048.0;
    CHECK(std::abs(var - 1.0) < 0.15);
    double lag = 0.0;
    for (int i = 1; i < 2048; ++i) lag += obs.y(i) * obs.y(i - 1);
    CHECK(std::abs(lag / 2047.0) < 0.1);
}

TEST_CASE("embedding bookkeeping") {
    const ModelParams p(0.5, 1.0, 1.0, 0.05);
    const SignalSampler s(p, 100);
    CHECK(s.embedding_size() >= 200);
    CHECK((s.embedding_size() & (s.embedding_size() - 1)) == 0);
}
