#pragma once

// Conditionalized random midpoint displacement (CRMD).
//
// A path on [0, T] with N = 2^n0 steps is refined dyadically. At level n the left half
// X_{n,2k-1} of every coarse increment X_{n-1,k} is drawn conditionally on the conditioning
// vector
//
//   M = (X_{n-1,k}, ..., X_{n-1,min(k+nu, 2^{n-1})}, X_{n,max(2k-1-mu,1)}, ..., X_{n,2k-2})
//
// (coarse block first, then fine block), and the right half follows from
// X_{n,2k} = X_{n-1,k} - X_{n,2k-1}. The conditional mean is e . M for a coefficient
// vector e that depends only on the window shape; the conditional variance is a unit-scale
// value v rescaled by (T 2^{-(n-1)})^{2H}.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "qfbm/fbm_kernel.hpp"
#include "qfbm/random.hpp"

namespace qfbm {

class CrmdPlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Window shape of one conditioning case.
struct CaseKey {
  int p = 0;  ///< fine increments available on the left (0..mu)
  int q = 1;  ///< coarse increments available, parent included (1..nu+1)
  /// Set when both windows are clipped, which only happens on levels that are too short
  /// for the generic geometry.
  bool small_level = false;

  friend auto operator<=>(const CaseKey&, const CaseKey&) = default;
};

template <typename Scalar = double>
struct CrmdCase {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  CaseKey key;
  Vector coeff;           ///< e, ordered as M (coarse block, then fine block)
  Scalar variance = 0;    ///< v at unit coarse spacing
  Scalar deviation = 0;   ///< sqrt(v)
};

/// e and v for a (p, q) window at unit coarse spacing.
///
/// Geometry (shifted by p/2 so that every time is nonnegative): X = [p/2, p/2 + 1/2],
/// coarse j = [p/2 + j, p/2 + j + 1] for j < q, fine i = [(i)/2, (i+1)/2] for i < p.
template <typename Scalar = double>
CrmdCase<Scalar> conditional_case(int p, int q, HurstParameter hurst) {
  using Vector = typename CrmdCase<Scalar>::Vector;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (p < 0 || q < 1) throw std::domain_error("invalid CRMD window");

  const Eigen::Index size = p + q;
  const Scalar origin = static_cast<Scalar>(p) / 2;
  std::vector<Scalar> lo(static_cast<std::size_t>(size)), hi(static_cast<std::size_t>(size));
  for (int j = 0; j < q; ++j) {
    lo[static_cast<std::size_t>(j)] = origin + j;
    hi[static_cast<std::size_t>(j)] = origin + j + 1;
  }
  for (int i = 0; i < p; ++i) {
    lo[static_cast<std::size_t>(q + i)] = static_cast<Scalar>(i) / 2;
    hi[static_cast<std::size_t>(q + i)] = static_cast<Scalar>(i + 1) / 2;
  }
  const Scalar x_lo = origin;
  const Scalar x_hi = origin + Scalar(1) / 2;

  Matrix gram(size, size);
  Vector cross(size);
  for (Eigen::Index r = 0; r < size; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    for (Eigen::Index c = 0; c <= r; ++c) {
      const auto uc = static_cast<std::size_t>(c);
      gram(r, c) = gram(c, r) = interval_increment_cov<Scalar>(lo[ur], hi[ur], lo[uc], hi[uc], hurst);
    }
    cross[r] = interval_increment_cov<Scalar>(lo[ur], hi[ur], x_lo, x_hi, hurst);
  }

  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "CRMD conditioning matrix is not positive definite for case (p=" << p << ", q=" << q
        << ", H=" << hurst.value() << ")";
    throw CrmdPlanError(msg.str());
  }
  CrmdCase<Scalar> out;
  out.key = CaseKey{p, q, false};
  out.coeff = llt.solve(cross);
  const Scalar var_x = interval_increment_cov<Scalar>(x_lo, x_hi, x_lo, x_hi, hurst);
  out.variance = var_x - cross.dot(out.coeff);
  if (!(out.variance > 0)) {
    std::ostringstream msg;
    msg << "CRMD conditional variance is not positive for case (p=" << p << ", q=" << q << ")";
    throw CrmdPlanError(msg.str());
  }
  using std::sqrt;
  out.deviation = sqrt(out.variance);
  return out;
}

/// Precomputed CRMD coefficient table. Immutable after construction.
template <typename Scalar = double>
class CrmdPlan {
 public:
  using Case = CrmdCase<Scalar>;

  /// nu defaults to ceil(mu / 2).
  CrmdPlan(HurstParameter hurst, int levels, int mu, std::optional<int> nu, double horizon)
      : hurst_(hurst), levels_(levels), mu_(mu), nu_(nu.value_or((mu + 1) / 2)), horizon_(horizon) {
    if (levels < 1 || levels > 30) throw std::domain_error("CRMD needs 1 <= n0 <= 30");
    if (mu < 0 || nu_ < 0) throw std::domain_error("CRMD windows must be nonnegative");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::domain_error("horizon must be positive");

    const std::int64_t n = steps();
    mu_eff_ = static_cast<int>(std::min<std::int64_t>(mu_, n - 2));
    nu_eff_ = static_cast<int>(std::min<std::int64_t>(nu_, n / 2 - 1));
    slots_.assign(static_cast<std::size_t>(mu_eff_ + 1) * static_cast<std::size_t>(nu_eff_ + 1), -1);

    for (int level = 1; level <= levels_; ++level) {
      const std::int64_t half = std::int64_t{1} << (level - 1);
      for (std::int64_t k = 1; k <= half; ++k) {
        const auto [p, q] = window(half, k);
        auto& slot = slots_[slot_index(p, q)];
        if (slot >= 0) continue;
        Case c = conditional_case<Scalar>(p, q, hurst_);
        c.key.small_level = p < mu_eff_ && q < nu_eff_ + 1;
        slot = static_cast<int>(cases_.size());
        cases_.push_back(std::move(c));
      }
    }
  }

  HurstParameter hurst() const { return hurst_; }
  int levels() const { return levels_; }
  std::int64_t steps() const { return std::int64_t{1} << levels_; }
  int mu() const { return mu_; }
  int nu() const { return nu_; }
  double horizon() const { return horizon_; }
  const std::vector<Case>& cases() const { return cases_; }

  /// Window (p, q) used for X_{level, 2k-1}; `half` is 2^{level-1}, k is 1-based.
  std::pair<int, int> window(std::int64_t half, std::int64_t k) const {
    const int p = static_cast<int>(std::min<std::int64_t>(mu_eff_, 2 * k - 2));
    const int q = static_cast<int>(std::min<std::int64_t>(nu_eff_ + 1, half - k + 1));
    return {p, q};
  }

  const Case& lookup(int level, std::int64_t k) const {
    if (level < 1 || level > levels_) throw std::out_of_range("CRMD level out of range");
    const std::int64_t half = std::int64_t{1} << (level - 1);
    if (k < 1 || k > half) throw std::out_of_range("CRMD index out of range");
    const auto [p, q] = window(half, k);
    return case_for(p, q);
  }

  /// Case for a window that occurs in this plan.
  const Case& case_for(int p, int q) const {
    return cases_[static_cast<std::size_t>(slots_[slot_index(p, q)])];
  }

  /// Conditional variance at `level` is variance_scale(level) * v.
  double variance_scale(int level) const {
    return std::pow(horizon_ * std::ldexp(1.0, -(level - 1)), hurst_.exponent());
  }

  /// Stored reals: coefficient vectors plus one variance per case.
  std::size_t table_size() const {
    std::size_t total = 0;
    for (const auto& c : cases_) total += static_cast<std::size_t>(c.coeff.size()) + 1;
    return total;
  }

 private:
  std::size_t slot_index(int p, int q) const {
    return static_cast<std::size_t>(p) * static_cast<std::size_t>(nu_eff_ + 1) +
           static_cast<std::size_t>(q - 1);
  }

  HurstParameter hurst_;
  int levels_;
  int mu_;
  int nu_;
  double horizon_;
  int mu_eff_ = 0;
  int nu_eff_ = 0;
  std::vector<int> slots_;
  std::vector<Case> cases_;
};

template <typename Scalar = double>
CrmdPlan<Scalar> build_crmd_plan(HurstParameter hurst, int levels, int mu, std::optional<int> nu,
                                 double horizon) {
  return CrmdPlan<Scalar>(hurst, levels, mu, nu, horizon);
}

/// Two level buffers of N reals; reuse across calls to avoid allocation.
template <typename Scalar = double>
struct CrmdWorkspace {
  std::vector<Scalar> coarse;
  std::vector<Scalar> fine;
};

/// Samples a path (N + 1 values, path[0] = 0) into `path`.
/// Consumes exactly N normals: X_{0,1} first, then level by level with k ascending.
template <typename Scalar, GaussianSource G>
void sample_crmd(const CrmdPlan<Scalar>& plan, G& source, CrmdWorkspace<Scalar>& work,
                 std::span<Scalar> path) {
  using std::pow;
  const std::int64_t n = plan.steps();
  if (static_cast<std::int64_t>(path.size()) != n + 1) throw std::invalid_argument("path size must be N+1");
  work.coarse.resize(static_cast<std::size_t>(n));
  work.fine.resize(static_cast<std::size_t>(n));
  Scalar* coarse = work.coarse.data();
  Scalar* fine = work.fine.data();

  const Scalar hurst = static_cast<Scalar>(plan.hurst().value());
  coarse[0] = pow(static_cast<Scalar>(plan.horizon()), hurst) * static_cast<Scalar>(source());

  for (int level = 1; level <= plan.levels(); ++level) {
    const std::int64_t half = std::int64_t{1} << (level - 1);
    const Scalar scale = pow(static_cast<Scalar>(plan.horizon()) * std::ldexp(Scalar(1), -(level - 1)), hurst);
    for (std::int64_t k = 1; k <= half; ++k) {
      const auto [p, q] = plan.window(half, k);
      const auto& c = plan.case_for(p, q);
      const Scalar* e = c.coeff.data();
      const Scalar* cw = coarse + (k - 1);
      const Scalar* fw = fine + (2 * k - 2 - p);
      Scalar mean = 0;
      for (int j = 0; j < q; ++j) mean += e[j] * cw[j];
      for (int i = 0; i < p; ++i) mean += e[q + i] * fw[i];
      const Scalar x = mean + c.deviation * scale * static_cast<Scalar>(source());
      fine[2 * k - 2] = x;
      fine[2 * k - 1] = coarse[k - 1] - x;
    }
    std::swap(coarse, fine);
  }

  path[0] = 0;
  Scalar running = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    running += coarse[i];
    path[static_cast<std::size_t>(i + 1)] = running;
  }
}

template <typename Scalar, GaussianSource G>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sample_crmd(const CrmdPlan<Scalar>& plan, G& source) {
  CrmdWorkspace<Scalar> work;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> path(plan.steps() + 1);
  sample_crmd(plan, source, work, std::span<Scalar>(path.data(), static_cast<std::size_t>(path.size())));
  return path;
}

/// Full-conditioning reference sampler. The increments drawn in CRMD order
/// (X_{0,1}, X_{1,1}, X_{2,1}, X_{2,3}, ...) have covariance L L^T; applying L to the
/// same normals reproduces sequential conditioning on everything generated so far.
/// O(N^2) memory and time per path.
template <typename Scalar = double>
class CrmdExactPlan {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  CrmdExactPlan(HurstParameter hurst, int levels, double horizon)
      : hurst_(hurst), levels_(levels), horizon_(horizon) {
    if (levels < 1 || levels > 13) throw std::domain_error("exact CRMD supports 1 <= n0 <= 13");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::domain_error("horizon must be positive");
    const std::int64_t n = steps();
    std::vector<Scalar> lo, hi;
    lo.reserve(static_cast<std::size_t>(n));
    hi.reserve(static_cast<std::size_t>(n));
    const Scalar t = static_cast<Scalar>(horizon);
    lo.push_back(0);
    hi.push_back(t);
    for (int level = 1; level <= levels; ++level) {
      const std::int64_t half = std::int64_t{1} << (level - 1);
      const Scalar width = t * std::ldexp(Scalar(1), -level);
      for (std::int64_t k = 1; k <= half; ++k) {
        lo.push_back(static_cast<Scalar>(2 * k - 2) * width);
        hi.push_back(static_cast<Scalar>(2 * k - 1) * width);
      }
    }
    Matrix cov(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto ur = static_cast<std::size_t>(r);
      for (Eigen::Index c = 0; c <= r; ++c) {
        const auto uc = static_cast<std::size_t>(c);
        cov(r, c) = cov(c, r) = interval_increment_cov<Scalar>(lo[ur], hi[ur], lo[uc], hi[uc], hurst);
      }
    }
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw CrmdPlanError("covariance of CRMD increments is not positive definite");
    }
    factor_ = llt.matrixL();
  }

  HurstParameter hurst() const { return hurst_; }
  int levels() const { return levels_; }
  std::int64_t steps() const { return std::int64_t{1} << levels_; }
  double horizon() const { return horizon_; }
  /// Lower Cholesky factor of the covariance of the increments in generation order.
  const Matrix& factor() const { return factor_; }

 private:
  HurstParameter hurst_;
  int levels_;
  double horizon_;
  Matrix factor_;
};

template <typename Scalar, GaussianSource G>
void sample_crmd_exact(const CrmdExactPlan<Scalar>& plan, G& source, CrmdWorkspace<Scalar>& work,
                       std::span<Scalar> path) {
  const std::int64_t n = plan.steps();
  if (static_cast<std::int64_t>(path.size()) != n + 1) throw std::invalid_argument("path size must be N+1");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = static_cast<Scalar>(source());
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y =
      plan.factor().template triangularView<Eigen::Lower>() * z;

  work.coarse.resize(static_cast<std::size_t>(n));
  work.fine.resize(static_cast<std::size_t>(n));
  Scalar* coarse = work.coarse.data();
  Scalar* fine = work.fine.data();
  coarse[0] = y[0];
  Eigen::Index next = 1;
  for (int level = 1; level <= plan.levels(); ++level) {
    const std::int64_t half = std::int64_t{1} << (level - 1);
    for (std::int64_t k = 1; k <= half; ++k) {
      fine[2 * k - 2] = y[next++];
      fine[2 * k - 1] = coarse[k - 1] - fine[2 * k - 2];
    }
    std::swap(coarse, fine);
  }
  path[0] = 0;
  Scalar running = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    running += coarse[i];
    path[static_cast<std::size_t>(i + 1)] = running;
  }
}

template <typename Scalar, GaussianSource G>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sample_crmd_exact(const CrmdExactPlan<Scalar>& plan, G& source) {
  CrmdWorkspace<Scalar> work;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> path(plan.steps() + 1);
  sample_crmd_exact(plan, source, work, std::span<Scalar>(path.data(), static_cast<std::size_t>(path.size())));
  return path;
}

/// Convenience overload that factors the covariance on every call.
template <GaussianSource G>
Eigen::VectorXd sample_crmd_exact(HurstParameter hurst, int levels, double horizon, G& source) {
  const CrmdExactPlan<double> plan(hurst, levels, horizon);
  return sample_crmd_exact(plan, source);
}

}  // namespace qfbm
