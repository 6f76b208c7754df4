#include "qfbm/circulant_embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include <fftw3.h>

namespace qfbm {
namespace {

// The FFTW planner is not reentrant; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct CePlan::FftPlan {
  explicit FftPlan(int n) : size(n) {
    std::vector<std::complex<double>> scratch(static_cast<std::size_t>(n));
    auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(n, data, data, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("FFTW could not create a plan");
  }
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  void execute(std::vector<std::complex<double>>& buffer) const {
    auto* data = reinterpret_cast<fftw_complex*>(buffer.data());
    fftw_execute_dft(plan, data, data);
  }

  int size;
  fftw_plan plan;
};

CePlan::CePlan(std::int64_t steps, HurstParameter hurst, double step)
    : steps_(steps), hurst_(hurst), step_(step) {
  if (steps < 2) throw std::domain_error("circulant embedding needs N >= 2");
  if (!(step > 0.0) || !std::isfinite(step)) throw std::domain_error("step must be positive");
  const std::int64_t n = 2 * steps - 2;
  if (n > std::numeric_limits<int>::max()) throw std::domain_error("embedding too large");

  first_row_.resize(n);
  for (std::int64_t k = 0; k < steps; ++k) first_row_[k] = increment_cov(k, step, hurst);
  for (std::int64_t k = steps; k < n; ++k) first_row_[k] = first_row_[n - k];

  fft_ = std::make_shared<const FftPlan>(static_cast<int>(n));
  std::vector<std::complex<double>> buffer(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) buffer[static_cast<std::size_t>(k)] = first_row_[k];
  fft_->execute(buffer);

  lambda_.resize(n);
  double max_abs = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    lambda_[k] = buffer[static_cast<std::size_t>(k)].real();
    max_abs = std::max(max_abs, std::abs(lambda_[k]));
    max_imag_ = std::max(max_imag_, std::abs(buffer[static_cast<std::size_t>(k)].imag()));
  }
  if (max_imag_ > 1e-8 * max_abs) {
    throw EmbeddingError("circulant eigenvalues are not real");
  }

  const double threshold = -kNegativeTolerance * first_row_[0];
  for (std::int64_t k = 0; k < n; ++k) {
    if (lambda_[k] >= 0.0) continue;
    if (lambda_[k] < threshold) {
      std::ostringstream msg;
      msg << "embedding not nonnegative definite: lambda[" << k << "] = " << lambda_[k];
      throw EmbeddingError(msg.str());
    }
    lambda_[k] = 0.0;
    ++clamped_;
  }
  amplitude_ = (lambda_ / static_cast<double>(n)).cwiseSqrt();
}

void CePlan::forward(std::vector<std::complex<double>>& buffer) const {
  if (buffer.size() != static_cast<std::size_t>(fft_->size)) {
    throw std::invalid_argument("FFT buffer has the wrong length");
  }
  fft_->execute(buffer);
}

CePlan build_ce_plan(std::int64_t steps, HurstParameter hurst, double step) {
  return CePlan(steps, hurst, step);
}

Eigen::VectorXd increments_to_path(const Eigen::Ref<const Eigen::VectorXd>& increments) {
  if (increments.size() == 0) throw std::invalid_argument("empty increment path");
  Eigen::VectorXd path(increments.size() + 1);
  path[0] = 0.0;
  double running = 0.0;
  for (Eigen::Index i = 0; i < increments.size(); ++i) {
    running += increments[i];
    path[i + 1] = running;
  }
  return path;
}

}  // namespace qfbm
