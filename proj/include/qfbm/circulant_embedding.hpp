#pragma once

// Exact sampling of fBm increments by circulant embedding of the Toeplitz increment
// covariance. One complex FFT of length 2N-2 produces two independent increment paths.

#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "qfbm/fbm_kernel.hpp"
#include "qfbm/random.hpp"

namespace qfbm {

/// Increments (B(t_{j+1}) - B(t_j), j = 0..N-1) of one path.
using IncrementPath = Eigen::VectorXd;

/// Raised when the circulant embedding has an eigenvalue below the round-off threshold.
class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precomputed eigenvalues of the circulant embedding. Immutable and shareable across threads.
class CePlan {
 public:
  /// Relative threshold below which a negative eigenvalue is an error rather than round-off.
  static constexpr double kNegativeTolerance = 1e-10;

  CePlan(std::int64_t steps, HurstParameter hurst, double step);

  std::int64_t steps() const { return steps_; }
  /// Length 2N-2 of the circulant.
  std::int64_t embedding_size() const { return 2 * steps_ - 2; }
  HurstParameter hurst() const { return hurst_; }
  double step() const { return step_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  /// First row of the circulant matrix.
  const Eigen::VectorXd& first_row() const { return first_row_; }
  /// Number of tiny negative eigenvalues that were clamped to zero.
  int clamped_count() const { return clamped_; }
  /// Largest |Im| of the eigenvalue DFT before it was discarded.
  double max_imag_residual() const { return max_imag_; }

  /// In-place forward DFT (sum_j x_j exp(-2 pi i jk/n)) of a buffer of embedding_size().
  void forward(std::vector<std::complex<double>>& buffer) const;

  /// Scales sqrt(lambda_k / n) applied to the complex normals before the FFT.
  const Eigen::VectorXd& amplitudes() const { return amplitude_; }

 private:
  struct FftPlan;

  std::int64_t steps_;
  HurstParameter hurst_;
  double step_;
  Eigen::VectorXd first_row_;
  Eigen::VectorXd lambda_;
  Eigen::VectorXd amplitude_;
  int clamped_ = 0;
  double max_imag_ = 0.0;
  std::shared_ptr<const FftPlan> fft_;
};

/// Builds the plan for N increments of width h. Throws EmbeddingError if the embedding
/// is not nonnegative definite.
CePlan build_ce_plan(std::int64_t steps, HurstParameter hurst, double step);

/// Scratch buffer for sample_ce_pair; one per thread.
struct CeWorkspace {
  std::vector<std::complex<double>> buffer;
};

/// Two independent increment paths with exact covariance gamma(|j-k|h).
/// Consumes 2(2N-2) normals: for k = 0..2N-3 the real then the imaginary part of w_k.
template <GaussianSource G>
std::pair<IncrementPath, IncrementPath> sample_ce_pair(const CePlan& plan, G& source,
                                                       CeWorkspace& work) {
  const auto n = static_cast<std::size_t>(plan.embedding_size());
  work.buffer.resize(n);
  const auto& amp = plan.amplitudes();
  for (std::size_t k = 0; k < n; ++k) {
    const double re = source();
    const double im = source();
    work.buffer[k] = {amp[static_cast<Eigen::Index>(k)] * re,
                      amp[static_cast<Eigen::Index>(k)] * im};
  }
  plan.forward(work.buffer);
  const auto steps = static_cast<Eigen::Index>(plan.steps());
  std::pair<IncrementPath, IncrementPath> out{IncrementPath(steps), IncrementPath(steps)};
  for (Eigen::Index j = 0; j < steps; ++j) {
    out.first[j] = work.buffer[static_cast<std::size_t>(j)].real();
    out.second[j] = work.buffer[static_cast<std::size_t>(j)].imag();
  }
  return out;
}

template <GaussianSource G>
std::pair<IncrementPath, IncrementPath> sample_ce_pair(const CePlan& plan, G& source) {
  CeWorkspace work;
  return sample_ce_pair(plan, source, work);
}

/// Cumulative sum with a leading zero: out[0] = 0, out[j] = sum_{i<j} incr[i].
Eigen::VectorXd increments_to_path(const Eigen::Ref<const Eigen::VectorXd>& increments);

}  // namespace qfbm
