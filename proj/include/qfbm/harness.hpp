#pragma once

// Monte Carlo experiments around the samplers: CRMD error curves and rate fits,
// truncation-rate experiments for the spherical field, and timing runs.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "qfbm/fbm_kernel.hpp"
#include "qfbm/qfbm_field.hpp"

namespace qfbm {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Runs task(g) for g = 0..groups-1 on up to `threads` workers (0 = hardware concurrency).
/// Results must not depend on which worker runs which group.
void run_groups(std::size_t groups, unsigned threads, const std::function<void(std::size_t)>& task);

/// Samples are split into G = min(M, 100) contiguous groups; statistics are reduced per
/// group in sample order and groups are combined in index order, so results do not
/// depend on the number of workers. Standard errors come from the delete-a-group jackknife.
std::size_t group_count(std::uint64_t samples);
std::pair<std::uint64_t, std::uint64_t> group_range(std::size_t group, std::size_t groups, std::uint64_t samples);

struct ErrorCurve {
  double hurst = 0.0;
  std::int64_t steps = 0;
  std::vector<int> mu_values;
  std::vector<double> errors;   ///< sup over grid times of the L2(Omega) error
  std::vector<double> stderrs;  ///< jackknife standard errors of `errors`
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< RMS of the log residuals
  std::size_t points = 0;
};

/// Ordinary least squares of log y on log x over the pairs with x, y > 0.
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct RateFit {
  double r_h = 0.0;
  int s = 0;
  double intercept = 0.0;
  double residual = 0.0;
};

inline constexpr int kRateWindowEnd = 128;

/// Fits error ~ mu^{-r} over s <= mu <= 128. Needs at least three points with error > 0.
RateFit fit_rate(const ErrorCurve& curve, int s);

/// CRMD with windows mu (nu = ceil(mu/2)) against the full-conditioning reference, both
/// driven by the same N normals per sample. Horizon T = 1.
ErrorCurve crmd_error_curve(HurstParameter hurst, int levels, const std::vector<int>& mu_values,
                            std::uint64_t samples, std::uint64_t seed, unsigned threads = 0);

struct TruncationExperiment {
  double hurst = 0.0;
  double t = 0.0;
  int kappa_ref = 0;
  std::vector<int> kappa_values;
  std::vector<double> mc_errors;     ///< sqrt(E ||B^{kappa_ref}(t) - B^kappa(t)||^2)
  std::vector<double> stderrs;
  std::vector<double> exact_errors;  ///< the same quantity in closed form
  std::vector<double> tail_errors;   ///< truncation_error_exact, i.e. against the full field
  LogLogFit mc_fit;
  LogLogFit tail_fit;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

/// Mode paths for degrees up to kappa_ref are drawn once per sample and shared by all
/// kappa; errors are measured in L2(S^2) through orthonormality of the basis.
/// kappa_ref defaults to 4 max(kappa_values) and must exceed it.
TruncationExperiment truncation_rate_experiment(const AngularPowerSpectrum& spectrum, HurstParameter hurst,
                                                const std::vector<int>& kappa_values, double t,
                                                std::uint64_t samples, std::uint64_t seed,
                                                std::optional<int> kappa_ref = std::nullopt,
                                                unsigned threads = 0);

struct BenchMethod {
  enum class Kind { kCe, kCrmd } kind = Kind::kCe;
  int mu = 0;
  std::string label() const;
};

struct TimingRow {
  std::string method;
  int mu = 0;
  std::int64_t steps = 0;
  int reps = 0;
  double seconds_per_path = 0.0;  ///< median over reps; plan construction excluded
  std::uint64_t stored_reals = 0; ///< working memory of the sampler in doubles
};

/// Single-threaded timing of path generation. Each rep times a batch of paths.
std::vector<TimingRow> bench(const std::vector<BenchMethod>& methods, const std::vector<std::int64_t>& steps,
                             int reps, std::uint64_t seed, HurstParameter hurst = HurstParameter(0.7));

struct ComplexityFit {
  double slope = 0.0;              ///< free log-log slope
  double residual_linear = 0.0;    ///< RMS log residual of t = c N
  double residual_nlogn = 0.0;     ///< RMS log residual of t = c N log N
};

ComplexityFit fit_complexity(const std::vector<std::int64_t>& steps, const std::vector<double>& seconds);

void write_error_curve_csv(const ErrorCurve& curve, const std::filesystem::path& path);
void write_rate_fits_csv(const std::vector<std::pair<ErrorCurve, RateFit>>& fits, const std::filesystem::path& path);
void write_truncation_csv(const TruncationExperiment& experiment, const std::filesystem::path& path);
void write_timings_csv(const std::vector<TimingRow>& rows, const std::filesystem::path& path);

}  // namespace qfbm
