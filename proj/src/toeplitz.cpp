#include "cgemev/toeplitz.hpp"

#include "cgemev/errors.hpp"
#include "cgemev/rng.hpp"

#include <cmath>
#include <random>

namespace cgemev {

CorrelationKernel build_kernel(const ModelParams& params, int n) {
    if (n < 2) throw Error("build_kernel: n must be >= 2");
    CorrelationKernel k{std::vector<double>(static_cast<std::size_t>(n)), params, n};
    for (int j = 0; j < n; ++j)
        k.first_row[static_cast<std::size_t>(j)] = covariance(params.nu, params.theta, params.delta * j);
    return k;
}

namespace {

// Levinson recursion for a symmetric PD Toeplitz system, all right-hand sides
// in one pass. The Yule-Walker vector y is kept together with its reversal so
// the inner updates are contiguous dot/axpy operations.
struct LevinsonOutput {
    std::vector<Eigen::VectorXd> x;
    double logdet = 0.0;
};

LevinsonOutput levinson_solve_multi(const std::vector<double>& first_row,
                                    const std::vector<const Eigen::VectorXd*>& rhs) {
    const int n = static_cast<int>(first_row.size());
    const double r0 = first_row[0];
    if (!(r0 > 0.0)) throw NotPositiveDefinite("toeplitz: diagonal not positive");

    LevinsonOutput out;
    out.logdet = static_cast<double>(n) * std::log(r0);
    const std::size_t m = rhs.size();
    out.x.assign(m, Eigen::VectorXd::Zero(n));
    for (std::size_t j = 0; j < m; ++j) out.x[j](0) = (*rhs[j])(0) / r0;
    if (n == 1) return out;

    Eigen::VectorXd t(n), t_rev(n);
    for (int i = 0; i < n; ++i) t(i) = first_row[static_cast<std::size_t>(i)] / r0;
    for (int i = 0; i < n; ++i) t_rev(i) = t(n - 1 - i);

    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd y_rev = Eigen::VectorXd::Zero(n);
    double beta = 1.0;
    double alpha = -t(1);
    y(0) = alpha;
    y_rev(0) = alpha;

    for (int k = 1; k < n; ++k) {
        beta *= (1.0 - alpha * alpha);
        if (!(beta > 0.0))
            throw NotPositiveDefinite("toeplitz: Levinson prediction error not positive");
        out.logdet += std::log(beta);

        const auto t_seg = t_rev.segment(n - 1 - k, k);
        for (std::size_t j = 0; j < m; ++j) {
            Eigen::VectorXd& xj = out.x[j];
            const double mu = ((*rhs[j])(k) / r0 - t_seg.dot(xj.head(k))) / beta;
            xj.head(k) += mu * y_rev.head(k);
            xj(k) = mu;
        }

        if (k < n - 1) {
            alpha = -(t(k + 1) + t_seg.dot(y.head(k))) / beta;
            y.head(k) += alpha * y_rev.head(k);
            y(k) = alpha;
            y_rev.head(k + 1) = y.head(k + 1).reverse();
        }
    }
    return out;
}

double gs_trace(const Eigen::VectorXd& x) {
    // Gohberg-Semencul: tr T^{-1} = (n x0^2 + sum_k (n - 2k) x_k^2) / x0,
    // with x the first column of T^{-1}.
    const int n = static_cast<int>(x.size());
    if (!(x(0) > 0.0)) throw NotPositiveDefinite("toeplitz: (T^-1)_00 not positive");
    double acc = static_cast<double>(n) * x(0) * x(0);
    for (int k = 1; k < n; ++k) acc += static_cast<double>(n - 2 * k) * x(k) * x(k);
    return acc / x(0);
}

Eigen::VectorXd unit_e0(int n) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(0) = 1.0;
    return e;
}

} // namespace

Eigen::VectorXd toeplitz_solve(const std::vector<double>& first_row, const Eigen::VectorXd& rhs,
                               double* logdet) {
    LevinsonOutput out = levinson_solve_multi(first_row, {&rhs});
    if (logdet) *logdet = out.logdet;
    return std::move(out.x[0]);
}

double toeplitz_inverse_trace(const std::vector<double>& first_row, double* logdet) {
    const Eigen::VectorXd e0 = unit_e0(static_cast<int>(first_row.size()));
    LevinsonOutput out = levinson_solve_multi(first_row, {&e0});
    if (logdet) *logdet = out.logdet;
    return gs_trace(out.x[0]);
}

FilterOperator::FilterOperator(double b, const CorrelationKernel& kernel, SolverPath path)
    : n_(kernel.n), b_(b) {
    if (!(b > 0.0)) throw Error("FilterOperator: b must be > 0");
    if (static_cast<int>(kernel.first_row.size()) != n_ || n_ < 2)
        throw Error("FilterOperator: kernel row/size mismatch");
    dense_ = (path == SolverPath::dense) || (path == SolverPath::automatic && n_ <= 256);

    if (dense_) {
        Eigen::MatrixXd m(n_, n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                m(i, j) = (i == j ? 1.0 : 0.0) +
                          b_ * kernel.first_row[static_cast<std::size_t>(std::abs(i - j))];
        llt_.compute(m);
        if (llt_.info() != Eigen::Success)
            throw NotPositiveDefinite("FilterOperator: dense Cholesky of I + bR failed");
        const Eigen::MatrixXd linv =
            llt_.matrixL().solve(Eigen::MatrixXd::Identity(n_, n_));
        trace_m_inv_ = linv.squaredNorm();
        logdet_ = 0.0;
        const Eigen::MatrixXd& packed = llt_.matrixLLT();
        for (int i = 0; i < n_; ++i) logdet_ += 2.0 * std::log(packed(i, i));
    } else {
        first_row_m_.resize(static_cast<std::size_t>(n_));
        for (int j = 0; j < n_; ++j)
            first_row_m_[static_cast<std::size_t>(j)] =
                (j == 0 ? 1.0 : 0.0) + b_ * kernel.first_row[static_cast<std::size_t>(j)];
    }
}

Eigen::VectorXd FilterOperator::solve_m(const Eigen::VectorXd& y) const {
    if (y.size() != n_) throw Error("FilterOperator: vector length mismatch");
    if (dense_) return llt_.solve(y);
    return std::move(levinson_solve_multi(first_row_m_, {&y}).x[0]);
}

Eigen::VectorXd FilterOperator::apply(const Eigen::VectorXd& y) const {
    return y - solve_m(y);
}

double FilterOperator::trace() const {
    if (dense_) return static_cast<double>(n_) - trace_m_inv_;
    const Eigen::VectorXd e0 = unit_e0(n_);
    return static_cast<double>(n_) - gs_trace(levinson_solve_multi(first_row_m_, {&e0}).x[0]);
}

double FilterOperator::log_det_m() const {
    if (dense_) return logdet_;
    const Eigen::VectorXd e0 = unit_e0(n_);
    return levinson_solve_multi(first_row_m_, {&e0}).logdet;
}

RandomizedTrace FilterOperator::trace_randomized(int probes, std::uint64_t seed) const {
    if (probes < 1) throw Error("trace_randomized: need at least one probe");
    std::mt19937_64 gen = rng::make(seed, 0, rng::Stream::probes);
    std::bernoulli_distribution coin(0.5);
    std::vector<Eigen::VectorXd> q(static_cast<std::size_t>(probes), Eigen::VectorXd(n_));
    for (int p = 0; p < probes; ++p)
        for (int i = 0; i < n_; ++i) q[static_cast<std::size_t>(p)](i) = coin(gen) ? 1.0 : -1.0;

    double sum = 0.0, sum_sq = 0.0;
    if (dense_) {
        for (int p = 0; p < probes; ++p) {
            const auto& qp = q[static_cast<std::size_t>(p)];
            const double est = static_cast<double>(n_) - qp.dot(llt_.solve(qp));
            sum += est;
            sum_sq += est * est;
        }
    } else {
        std::vector<const Eigen::VectorXd*> rhs;
        for (const auto& v : q) rhs.push_back(&v);
        const LevinsonOutput out = levinson_solve_multi(first_row_m_, rhs);
        for (int p = 0; p < probes; ++p) {
            const double est = static_cast<double>(n_) -
                               q[static_cast<std::size_t>(p)].dot(out.x[static_cast<std::size_t>(p)]);
            sum += est;
            sum_sq += est * est;
        }
    }
    RandomizedTrace out;
    out.probes = probes;
    out.estimate = sum / probes;
    if (probes > 1) {
        const double var = (sum_sq - sum * sum / probes) / (probes - 1);
        out.std_error = std::sqrt(std::max(var, 0.0) / probes);
    }
    return out;
}

double FilterOperator::cgem_statistic(const Eigen::VectorXd& y) const {
    if (dense_) {
        const Eigen::VectorXd u = llt_.solve(y);
        return y.dot(u) - u.squaredNorm() - trace();
    }
    const Eigen::VectorXd e0 = unit_e0(n_);
    const LevinsonOutput out = levinson_solve_multi(first_row_m_, {&y, &e0});
    const Eigen::VectorXd& u = out.x[0];
    const double tr_a = static_cast<double>(n_) - gs_trace(out.x[1]);
    return y.dot(u) - u.squaredNorm() - tr_a;
}

double FilterOperator::log_likelihood(const Eigen::VectorXd& y) const {
    if (dense_) {
        const Eigen::VectorXd u = llt_.solve(y);
        return -0.5 * (y.dot(u) + logdet_ + n_ * std::log(kTwoPi));
    }
    const LevinsonOutput out = levinson_solve_multi(first_row_m_, {&y});
    return -0.5 * (y.dot(out.x[0]) + out.logdet + n_ * std::log(kTwoPi));
}

Eigen::VectorXd apply_filter(double b, const CorrelationKernel& kernel, const Eigen::VectorXd& y,
                             SolverPath path) {
    return FilterOperator(b, kernel, path).apply(y);
}

double trace_filter(double b, const CorrelationKernel& kernel, SolverPath path) {
    return FilterOperator(b, kernel, path).trace();
}

RandomizedTrace trace_filter_randomized(double b, const CorrelationKernel& kernel, int probes,
                                        std::uint64_t seed, SolverPath path) {
    return FilterOperator(b, kernel, path).trace_randomized(probes, seed);
}

double cgem_statistic(double b, const CorrelationKernel& kernel, const Eigen::VectorXd& y,
                      SolverPath path) {
    return FilterOperator(b, kernel, path).cgem_statistic(y);
}

double log_likelihood(double b, const CorrelationKernel& kernel, const Eigen::VectorXd& y,
                      SolverPath path) {
    return FilterOperator(b, kernel, path).log_likelihood(y);
}

double gibbs_energy(const CorrelationKernel& kernel, const Eigen::VectorXd& z) {
    const int n = kernel.n;
    if (z.size() != n) throw Error("gibbs_energy: vector length mismatch");
    if (n > 4096) throw DenseTooLarge("gibbs_energy: dense no-nugget solve capped at n = 4096");
    Eigen::MatrixXd r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            r(i, j) = kernel.first_row[static_cast<std::size_t>(std::abs(i - j))];
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("gibbs_energy: R is numerically not positive definite");
    return z.dot(llt.solve(z)) / static_cast<double>(n);
}

} // namespace cgemev
