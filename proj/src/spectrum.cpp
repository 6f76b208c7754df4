#include <cmath>
#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "qfbm/qfbm_field.hpp"

namespace qfbm {
namespace {

constexpr int kDirectTerms = 4096;

// sum_{n=a}^{inf} f(n) for f(n) = n^{-s}, s > 1, by Euler-Maclaurin at n = a:
// int_a^inf + f(a)/2 - sum_k B_2k/(2k)! f^{(2k-1)}(a).
double power_tail(double s, double a) {
  const double f = std::pow(a, -s);
  double sum = f * a / (s - 1.0) + f / 2.0;
  // f'(a) = -s a^{-s-1}, f'''(a) = -s(s+1)(s+2) a^{-s-3}, f^(5) = -s..(s+4) a^{-s-5}
  const double d1 = -s * f / a;
  const double d3 = -s * (s + 1) * (s + 2) * f / (a * a * a);
  const double d5 = -s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * f / std::pow(a, 5);
  sum += -d1 / 12.0 + d3 / 720.0 - d5 / 30240.0;
  return sum;
}

}  // namespace

AngularPowerSpectrum AngularPowerSpectrum::power_law(double scale, double alpha) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::domain_error("power-law scale C must be positive");
  if (!std::isfinite(alpha)) throw std::domain_error("power-law exponent must be finite");
  AngularPowerSpectrum s;
  s.scale_ = scale;
  s.alpha_ = alpha;
  return s;
}

AngularPowerSpectrum AngularPowerSpectrum::explicit_list(std::vector<double> values) {
  if (values.empty()) throw std::domain_error("explicit spectrum needs at least A_0");
  for (const double a : values) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw std::domain_error("angular power spectrum must be nonnegative");
  }
  AngularPowerSpectrum s;
  s.values_ = std::move(values);
  return s;
}

std::optional<int> AngularPowerSpectrum::max_degree() const {
  if (is_power_law()) return std::nullopt;
  return static_cast<int>(values_.size()) - 1;
}

double AngularPowerSpectrum::operator()(int l) const {
  if (l < 0) throw std::domain_error("degree must be nonnegative");
  if (is_power_law()) return scale_ * std::pow(1.0 + l, -alpha_);
  return static_cast<std::size_t>(l) < values_.size() ? values_[static_cast<std::size_t>(l)] : 0.0;
}

double weighted_sum(const AngularPowerSpectrum& spectrum, int first, std::optional<int> last) {
  if (first < 0) first = 0;
  if (last && *last < first) return 0.0;
  if (!spectrum.is_power_law()) {
    const int stop = std::min(last.value_or(*spectrum.max_degree()), *spectrum.max_degree());
    double sum = 0.0;
    for (int l = stop; l >= first; --l) sum += (2.0 * l + 1.0) * spectrum(l);
    return sum;
  }
  if (last) {
    double sum = 0.0;
    for (int l = *last; l >= first; --l) sum += (2.0 * l + 1.0) * spectrum(l);
    return sum;
  }
  const double alpha = spectrum.alpha();
  if (!(alpha > 2.0)) throw std::domain_error("sum of (2l+1) A_l diverges for alpha <= 2");
  // With n = l + 1: (2l+1) A_l = C (2 n^{1-alpha} - n^{-alpha}).
  const int cutoff = std::max(first, 0) + kDirectTerms;
  double direct = 0.0;
  for (int l = cutoff - 1; l >= first; --l) direct += (2.0 * l + 1.0) * spectrum(l);
  const double n0 = cutoff + 1.0;
  const double tail = spectrum.scale() * (2.0 * power_tail(alpha - 1.0, n0) - power_tail(alpha, n0));
  return direct + tail;
}

double trace_q(const AngularPowerSpectrum& spectrum, std::optional<int> kappa) {
  if (kappa && *kappa < 0) throw std::domain_error("kappa must be nonnegative");
  return weighted_sum(spectrum, 0, kappa);
}

SummabilityReport check_summability(const AngularPowerSpectrum& spectrum, double eta, int d,
                                    HurstParameter hurst) {
  if (!(eta > 0.0)) throw std::domain_error("eta must be positive");
  if (d < 3) throw std::domain_error("dimension d must be at least 3");
  SummabilityReport report;
  const double weight_power = d - 2 + eta;
  if (spectrum.is_power_law()) {
    report.summable = spectrum.alpha() > d - 1 + eta;
  } else {
    report.summable = true;
  }
  double running = 0.0;
  int next_mark = 10;
  for (int l = 0; l <= 10000; ++l) {
    running += spectrum(l) * std::pow(static_cast<double>(l), weight_power);
    if (l == next_mark) {
      report.partial_sums.emplace_back(l, running);
      next_mark *= 10;
    }
  }
  report.time_hoelder = hurst.value();
  report.space_hoelder = eta / 2.0;
  return report;
}

std::uint64_t hyper_dim(int l, int d) {
  if (l < 0) throw std::domain_error("degree must be nonnegative");
  if (d < 3) throw std::domain_error("dimension d must be at least 3");
  // binom(l + d - 3, d - 3), built so every intermediate quotient is an integer.
  std::uint64_t binom = 1;
  const int k = d - 3;
  for (int i = 1; i <= k; ++i) {
    std::uint64_t next = 0;
    if (__builtin_mul_overflow(binom, static_cast<std::uint64_t>(l + i), &next)) {
      throw std::overflow_error("hyper_dim overflows 64 bits");
    }
    binom = next / static_cast<std::uint64_t>(i);
  }
  // h = (2l + d - 2) * binom / (d - 2); divide first where possible.
  const auto factor = static_cast<std::uint64_t>(2 * l + d - 2);
  const auto denom = static_cast<std::uint64_t>(d - 2);
  const std::uint64_t g = std::gcd(factor, denom);
  const std::uint64_t a = factor / g;
  const std::uint64_t b = binom / (denom / g);
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("hyper_dim overflows 64 bits");
  return out;
}

double rate_formula(double alpha, int d) {
  if (d < 3) throw std::domain_error("dimension d must be at least 3");
  if (!(alpha > d - 1)) throw std::domain_error("no convergence for alpha <= d - 1");
  return (alpha - d + 1.0) / 2.0;
}

double truncation_error_exact(const AngularPowerSpectrum& spectrum, int kappa, double t,
                              HurstParameter hurst) {
  if (kappa < 0) throw std::domain_error("kappa must be nonnegative");
  if (!(t >= 0.0)) throw std::domain_error("time must be nonnegative");
  if (t == 0.0) return 0.0;
  const double tail = weighted_sum(spectrum, kappa + 1, std::nullopt);
  return std::sqrt(std::pow(t, hurst.exponent()) * tail);
}

}  // namespace qfbm
