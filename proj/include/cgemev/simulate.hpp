#pragma once

#include "cgemev/spectral.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

namespace cgemev {

enum class SimMethod { automatic, circulant, dense };

struct SimulationSpec {
    ModelParams params0;
    int n = 0;
    std::uint64_t seed = 0;
    SimMethod method = SimMethod::automatic;
};

struct ObservationSeries {
    Eigen::VectorXd y;
    double delta = 0.0;
    std::uint64_t seed = 0;
};

/// Exact sampler for z ~ N(0, b0 R_theta0), reusable across replicates. The
/// circulant embedding (eigenvalues cached) is attempted at sizes 2n, 4n, ...,
/// 16n; tiny negative eigenvalues within 1e-10 of the maximum are clipped to
/// zero, otherwise the sampler falls back to a dense Cholesky factor.
class SignalSampler {
  public:
    SignalSampler(const ModelParams& params0, int n, SimMethod method = SimMethod::automatic);

    Eigen::VectorXd draw(std::uint64_t master_seed, std::uint64_t replicate) const;

    bool used_circulant() const { return circulant_; }
    int embedding_size() const { return m_; }
    bool clipped_eigenvalues() const { return clipped_; }

  private:
    ModelParams params_;
    int n_;
    bool circulant_ = false;
    bool clipped_ = false;
    int m_ = 0;
    std::vector<double> sqrt_eig_;   // circulant path
    Eigen::MatrixXd chol_;           // dense path: L with b0 R = L L^T
};

Eigen::VectorXd simulate_signal(const SimulationSpec& spec);
ObservationSeries simulate_observations(const SimulationSpec& spec);

/// In-place radix-2 complex FFT (power-of-2 length), forward for sign = -1.
void fft_radix2(std::vector<std::complex<double>>& a, int sign);

} // namespace cgemev
