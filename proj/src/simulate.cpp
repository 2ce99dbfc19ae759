#include "cgemev/simulate.hpp"

#include "cgemev/errors.hpp"
#include "cgemev/rng.hpp"
#include "cgemev/toeplitz.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cgemev {

void fft_radix2(std::vector<std::complex<double>>& a, int sign) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw Error("fft_radix2: length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * kTwoPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

namespace {

std::size_t next_pow2(std::size_t v) {
    std::size_t p = 1;
    while (p < v) p <<= 1;
    return p;
}

// Embedding eigenvalues for circulant extension of the correlation row; empty
// when the extension is not nonnegative definite within tolerance.
std::vector<double> try_embedding(const ModelParams& p, int n, int m, bool* clipped) {
    std::vector<std::complex<double>> c(static_cast<std::size_t>(m));
    for (int j = 0; j <= m / 2; ++j)
        c[static_cast<std::size_t>(j)] = covariance(p.nu, p.theta, p.delta * j);
    for (int j = m / 2 + 1; j < m; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(m - j)];
    fft_radix2(c, -1);

    double max_eig = 0.0;
    for (const auto& e : c) max_eig = std::max(max_eig, e.real());
    const double floor = -1e-10 * max_eig;
    std::vector<double> eig(static_cast<std::size_t>(m));
    bool any_clip = false;
    for (int j = 0; j < m; ++j) {
        double e = c[static_cast<std::size_t>(j)].real();
        if (e < floor) return {};
        if (e < 0.0) {
            e = 0.0;
            any_clip = true;
        }
        eig[static_cast<std::size_t>(j)] = e;
    }
    if (clipped) *clipped = any_clip;
    (void)n;
    return eig;
}

} // namespace

SignalSampler::SignalSampler(const ModelParams& params0, int n, SimMethod method)
    : params_(params0), n_(n) {
    if (n < 2) throw Error("SignalSampler: n must be >= 2");

    if (method != SimMethod::dense) {
        const std::size_t base = next_pow2(2 * static_cast<std::size_t>(n));
        const std::size_t cap = next_pow2(16 * static_cast<std::size_t>(n));
        for (std::size_t m = base; m <= cap; m <<= 1) {
            bool clipped = false;
            std::vector<double> eig = try_embedding(params_, n, static_cast<int>(m), &clipped);
            if (!eig.empty()) {
                circulant_ = true;
                clipped_ = clipped;
                m_ = static_cast<int>(m);
                sqrt_eig_.resize(m);
                for (std::size_t j = 0; j < m; ++j) sqrt_eig_[j] = std::sqrt(eig[j]);
                return;
            }
        }
        if (method == SimMethod::circulant)
            throw EmbeddingNotPD("SignalSampler: no nonnegative circulant embedding up to 16n");
    }

    if (n > 4096)
        throw DenseTooLarge("SignalSampler: dense fallback capped at n = 4096");
    const CorrelationKernel kernel = build_kernel(params_, n);
    Eigen::MatrixXd r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            r(i, j) = params_.b * kernel.first_row[static_cast<std::size_t>(std::abs(i - j))];
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("SignalSampler: dense Cholesky of b0 R failed");
    chol_ = llt.matrixL();
}

Eigen::VectorXd SignalSampler::draw(std::uint64_t master_seed, std::uint64_t replicate) const {
    std::mt19937_64 gen = rng::make(master_seed, replicate, rng::Stream::signal);
    std::normal_distribution<double> normal(0.0, 1.0);

    if (!circulant_) {
        Eigen::VectorXd g(n_);
        for (int i = 0; i < n_; ++i) g(i) = normal(gen);
        return chol_ * g;
    }

    const std::size_t m = static_cast<std::size_t>(m_);
    std::vector<std::complex<double>> w(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double a = normal(gen);
        const double b = normal(gen);
        w[k] = sqrt_eig_[k] * std::complex<double>(a, b);
    }
    // z = Re[(1/sqrt(m)) sum_k sqrt(lambda_k) xi_k e^{+2pi i jk/m}] has covariance
    // given by the circulant row; first n entries restrict to b0 R_theta0.
    fft_radix2(w, +1);
    const double scale = std::sqrt(params_.b / static_cast<double>(m));
    Eigen::VectorXd z(n_);
    for (int j = 0; j < n_; ++j) z(j) = scale * w[static_cast<std::size_t>(j)].real();
    return z;
}

Eigen::VectorXd simulate_signal(const SimulationSpec& spec) {
    SignalSampler sampler(spec.params0, spec.n, spec.method);
    return sampler.draw(spec.seed, 0);
}

ObservationSeries simulate_observations(const SimulationSpec& spec) {
    Eigen::VectorXd z = simulate_signal(spec);
    std::mt19937_64 gen = rng::make(spec.seed, 0, rng::Stream::noise);
    std::normal_distribution<double> normal(0.0, 1.0);
    ObservationSeries out;
    out.delta = spec.params0.delta;
    out.seed = spec.seed;
    out.y.resize(spec.n);
    for (int i = 0; i < spec.n; ++i) out.y(i) = z(i) + normal(gen);
    return out;
}

} // namespace cgemev
