#pragma once

#include "cgemev/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <vector>

namespace cgemev {

/// First row of the Matern correlation Toeplitz matrix R_theta on a grid of
/// size n with step delta: first_row[j] = K_{nu,theta}(delta j).
struct CorrelationKernel {
    std::vector<double> first_row;
    ModelParams params;
    int n = 0;
};

CorrelationKernel build_kernel(const ModelParams& params, int n);

enum class SolverPath { automatic, dense, levinson };

struct RandomizedTrace {
    double estimate = 0.0;
    double std_error = 0.0;
    int probes = 0;
};

/// A_{b,theta} = b R (I + b R)^{-1}, backed by a factorization of M = I + b R.
/// The dense path uses Cholesky; the levinson path uses the O(n^2) Levinson
/// recursion with the Gohberg-Semencul form of M^{-1} for the exact trace.
class FilterOperator {
  public:
    FilterOperator(double b, const CorrelationKernel& kernel,
                   SolverPath path = SolverPath::automatic);

    int size() const { return n_; }
    double b() const { return b_; }

    Eigen::VectorXd solve_m(const Eigen::VectorXd& y) const; // (I + bR)^{-1} y
    Eigen::VectorXd apply(const Eigen::VectorXd& y) const;   // A y = y - (I+bR)^{-1} y
    double trace() const;                                    // tr A = n - tr M^{-1}
    RandomizedTrace trace_randomized(int probes, std::uint64_t seed) const;
    double log_det_m() const;                                // log det (I + bR)

    /// y^T A (I - A) y - tr A; the root of this in theta is the CGEM-EV equation.
    double cgem_statistic(const Eigen::VectorXd& y) const;
    /// -(1/2) [ y^T M^{-1} y + log det M + n log 2pi ]
    double log_likelihood(const Eigen::VectorXd& y) const;

  private:
    int n_;
    double b_;
    bool dense_;
    Eigen::LLT<Eigen::MatrixXd> llt_;  // dense path
    std::vector<double> first_row_m_;  // levinson path: first row of M
    double logdet_ = 0.0;
    double trace_m_inv_ = 0.0;
};

// Free-function forms of the module operations.
Eigen::VectorXd apply_filter(double b, const CorrelationKernel& kernel, const Eigen::VectorXd& y,
                             SolverPath path = SolverPath::automatic);
double trace_filter(double b, const CorrelationKernel& kernel,
                    SolverPath path = SolverPath::automatic);
RandomizedTrace trace_filter_randomized(double b, const CorrelationKernel& kernel, int probes,
                                        std::uint64_t seed,
                                        SolverPath path = SolverPath::automatic);
double cgem_statistic(double b, const CorrelationKernel& kernel, const Eigen::VectorXd& y,
                      SolverPath path = SolverPath::automatic);
double log_likelihood(double b, const CorrelationKernel& kernel, const Eigen::VectorXd& y,
                      SolverPath path = SolverPath::automatic);

/// Gibbs energy (1/n) z^T R^{-1} z (no-nugget path; dense Cholesky of R itself,
/// which is ill-conditioned for small delta -- desk scale only).
double gibbs_energy(const CorrelationKernel& kernel, const Eigen::VectorXd& z);

/// Solve T x = rhs for a symmetric positive definite Toeplitz matrix given its
/// first row; optionally returns log det T. O(n^2) Levinson recursion.
Eigen::VectorXd toeplitz_solve(const std::vector<double>& first_row, const Eigen::VectorXd& rhs,
                               double* logdet = nullptr);

/// tr T^{-1} from the Gohberg-Semencul representation built on T x = e_0.
double toeplitz_inverse_trace(const std::vector<double>& first_row, double* logdet = nullptr);

} // namespace cgemev
