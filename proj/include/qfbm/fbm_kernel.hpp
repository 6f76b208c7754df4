#pragma once

// Closed-form covariances of fractional Brownian motion and of its increments.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace qfbm {

/// Hurst index of a fractional Brownian motion, restricted to the open interval (0, 1).
class HurstParameter {
 public:
  explicit HurstParameter(double value) : value_(value) {
    if (!(value > 0.0 && value < 1.0)) {
      throw std::domain_error("Hurst parameter must lie in (0, 1), got " + std::to_string(value));
    }
  }

  double value() const { return value_; }
  /// Exponent 2H that appears in every covariance formula.
  double exponent() const { return 2.0 * value_; }

  friend bool operator==(HurstParameter, HurstParameter) = default;

 private:
  double value_;
};

/// Equidistant grid 0 = t_0 < ... < t_N = T. Grid times are j*h, never accumulated sums.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::int64_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw std::domain_error("time horizon must be positive and finite");
    }
    if (steps < 1) throw std::domain_error("time grid needs at least one step");
    step_ = horizon / static_cast<double>(steps);
  }

  double horizon() const { return horizon_; }
  std::int64_t steps() const { return steps_; }
  double step() const { return step_; }

  double time(std::int64_t j) const {
    if (j == steps_) return horizon_;
    return static_cast<double>(j) * step_;
  }

  /// Index j with t_j == t up to a relative 1e-9 of the step, or -1 when t is off-grid.
  std::int64_t index_of(double t) const {
    const double r = t / step_;
    const double j = std::round(r);
    if (std::abs(r - j) > 1e-9 || j < 0 || j > static_cast<double>(steps_)) return -1;
    return static_cast<std::int64_t>(j);
  }

 private:
  double horizon_;
  std::int64_t steps_;
  double step_;
};

namespace detail {

inline void require_nonnegative_time(double t) {
  if (!(t >= 0.0)) throw std::domain_error("fBm covariance needs nonnegative times");
}

// sum_{j>=2} binom(a, j) x^j, i.e. (1+x)^a - 1 - a*x, for |x| <= 1/4.
template <typename Scalar>
Scalar binomial_tail(Scalar a, Scalar x) {
  Scalar coeff = a * (a - 1) / 2;
  Scalar power = x * x;
  Scalar sum = coeff * power;
  for (int j = 3; j < 200; ++j) {
    coeff *= (a - (j - 1)) / j;
    power *= x;
    const Scalar term = coeff * power;
    sum += term;
    if (std::abs(term) <= std::numeric_limits<Scalar>::epsilon() * std::abs(sum) / 4) break;
    if (coeff == 0) break;
  }
  return sum;
}

// (k+1)^a + (k-1)^a - 2 k^a for integer k >= 0 and a = 2H.
template <typename Scalar>
Scalar second_difference(std::int64_t k, Scalar a) {
  using std::pow;
  if (k == 0) return 2;  // |1|^a + |-1|^a - 0
  const Scalar kk = static_cast<Scalar>(k);
  if (k < 4) return pow(kk + 1, a) + pow(kk - 1, a) - 2 * pow(kk, a);
  // Even binomial series in 1/k; odd powers cancel exactly, so no digits are lost.
  const Scalar x2 = 1 / (kk * kk);
  Scalar coeff = a * (a - 1) / 2;
  Scalar power = x2;
  Scalar sum = coeff * power;
  for (int j = 2; j < 200; ++j) {
    coeff *= (a - (2 * j - 2)) * (a - (2 * j - 1)) / ((2 * j - 1) * (2 * j));
    power *= x2;
    const Scalar term = coeff * power;
    sum += term;
    if (std::abs(term) <= std::numeric_limits<Scalar>::epsilon() * std::abs(sum) / 4) break;
    if (coeff == 0) break;
  }
  return 2 * pow(kk, a) * sum;
}

}  // namespace detail

/// phi_H(s, t) = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2.
template <typename Scalar = double>
Scalar fbm_cov(Scalar s, Scalar t, HurstParameter hurst) {
  using std::abs;
  using std::pow;
  detail::require_nonnegative_time(static_cast<double>(s));
  detail::require_nonnegative_time(static_cast<double>(t));
  const Scalar a = static_cast<Scalar>(hurst.exponent());
  return (pow(t, a) + pow(s, a) - pow(abs(t - s), a)) / 2;
}

/// Covariance of two step-h increments that are k steps apart:
/// gamma(kh) = h^{2H} (|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}) / 2.
template <typename Scalar = double>
Scalar increment_cov(std::int64_t lag, Scalar step, HurstParameter hurst) {
  using std::pow;
  if (lag < 0) throw std::domain_error("increment lag must be nonnegative");
  if (!(step > 0)) throw std::domain_error("increment step must be positive");
  const Scalar a = static_cast<Scalar>(hurst.exponent());
  return pow(step, a) * detail::second_difference<Scalar>(lag, a) / 2;
}

/// Cov(B(b) - B(a), B(d) - B(c)) for intervals [a, b] and [c, d].
/// Well separated intervals are evaluated as a binomial series around the centre of the
/// four endpoints, which keeps the long-range tail accurate.
template <typename Scalar = double>
Scalar interval_increment_cov(Scalar a, Scalar b, Scalar c, Scalar d, HurstParameter hurst) {
  using std::abs;
  using std::max;
  using std::min;
  using std::pow;
  if (!(a >= 0 && c >= 0)) throw std::domain_error("interval endpoints must be nonnegative");
  if (!(a <= b) || !(c <= d)) throw std::domain_error("interval endpoints are reversed");
  const Scalar e = static_cast<Scalar>(hurst.exponent());

  // Signed lags: +|d-a|, +|c-b|, -|c-a|, -|d-b|.
  const std::array<Scalar, 4> lag{d - a, c - b, c - a, d - b};
  const std::array<int, 4> sign{1, 1, -1, -1};
  const Scalar lo = min(min(lag[0], lag[1]), min(lag[2], lag[3]));
  const Scalar hi = max(max(lag[0], lag[1]), max(lag[2], lag[3]));
  const Scalar centre = (lo + hi) / 2;
  const Scalar radius = (hi - lo) / 2;

  if (centre != 0 && radius <= abs(centre) / 4) {
    // All lags share a sign; linear terms of the expansion cancel because sum(sign*lag) = 0.
    Scalar sum = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      sum += sign[i] * detail::binomial_tail<Scalar>(e, (lag[i] - centre) / centre);
    }
    return pow(abs(centre), e) * sum / 2;
  }
  Scalar sum = 0;
  for (std::size_t i = 0; i < 4; ++i) sum += sign[i] * pow(abs(lag[i]), e);
  return sum / 2;
}

}  // namespace qfbm
