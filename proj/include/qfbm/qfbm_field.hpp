#pragma once

// Q-fractional Brownian motion on S^2 by a truncated Karhunen-Loeve expansion
//
//   B^kappa(t, x) = sum_{l <= kappa} sum_m sqrt(A_l) beta_{l,m}(t) Y_{l,m}(x)
//
// with independent real fBm paths beta_{l,m}, plus the spectral bookkeeping around it:
// trace, summability, exact truncation errors and convergence-rate formulas.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "qfbm/circulant_embedding.hpp"
#include "qfbm/crmd.hpp"
#include "qfbm/fbm_kernel.hpp"
#include "qfbm/sphere_harmonics.hpp"

namespace qfbm {

/// Angular power spectrum (A_l). Either an explicit finite list or the power law
/// A_l = C (1 + l)^{-alpha}, which satisfies A_l <= C l^{-alpha} for every l > ell0 = 0.
class AngularPowerSpectrum {
 public:
  static AngularPowerSpectrum power_law(double scale, double alpha);
  static AngularPowerSpectrum explicit_list(std::vector<double> values);

  bool is_power_law() const { return values_.empty(); }
  double scale() const { return scale_; }
  double alpha() const { return alpha_; }
  int ell0() const { return 0; }
  /// Last degree with a nonzero entry for explicit spectra.
  std::optional<int> max_degree() const;

  double operator()(int l) const;

 private:
  AngularPowerSpectrum() = default;

  double scale_ = 0.0;
  double alpha_ = 0.0;
  std::vector<double> values_;
};

/// sum_{l=first}^{last} (2l+1) A_l, or to infinity when last is empty.
/// Infinite power-law tails are summed directly up to a cutoff and closed with an
/// Euler-Maclaurin remainder, converged to relative 1e-12.
double weighted_sum(const AngularPowerSpectrum& spectrum, int first, std::optional<int> last);

/// trace Q = sum_{l <= kappa} (2l+1) A_l; kappa empty means the full series.
double trace_q(const AngularPowerSpectrum& spectrum, std::optional<int> kappa = std::nullopt);

struct SummabilityReport {
  bool summable = false;
  /// Partial sums of A_l l^{d-2+eta} at l = 10, 100, 1000, 10000.
  std::vector<std::pair<int, double>> partial_sums;
  double time_hoelder = 0.0;   ///< exponents are "minus": any smaller exponent is attained
  double space_hoelder = 0.0;
};

/// sum_l A_l l^{d-2+eta} < infinity. For power laws the criterion is alpha > d - 1 + eta.
SummabilityReport check_summability(const AngularPowerSpectrum& spectrum, double eta, int d,
                                    HurstParameter hurst);

/// Dimension of the degree-l spherical harmonics on S^{d-1}:
/// h(l, d) = (2l + d - 2) (l + d - 3)! / ((d - 2)! l!). Throws std::overflow_error.
std::uint64_t hyper_dim(int l, int d);

/// L^2 truncation rate (alpha - d + 1) / 2 on S^{d-1}.
double rate_formula(double alpha, int d);

/// sqrt(E ||B(t) - B^kappa(t)||^2_{L^2(S^2)}) = sqrt(t^{2H} sum_{l > kappa} (2l+1) A_l).
double truncation_error_exact(const AngularPowerSpectrum& spectrum, int kappa, double t,
                              HurstParameter hurst);

/// Temporal sampler used for the mode paths.
struct CeEngine {};
struct CrmdEngine {
  int mu = 5;
  std::optional<int> nu;
};
struct CrmdExactEngine {};
using TemporalEngine = std::variant<CeEngine, CrmdEngine, CrmdExactEngine>;

std::string engine_name(const TemporalEngine& engine);

/// Mode (l, m) lives in row l^2 + l + m; column j is time t_j.
struct ModePaths {
  int kappa = 0;
  Eigen::MatrixXd values;

  static Eigen::Index row(int l, int m) { return static_cast<Eigen::Index>(l) * l + l + m; }
  double operator()(int l, int m, Eigen::Index j) const { return values(row(l, m), j); }
};

/// Draws (kappa+1)^2 independent fBm paths for one realization of the field.
///
/// Streams: with CE, modes 2i and 2i+1 take the real and imaginary outputs of the pair
/// drawn from stream (seed, kFieldMode, sample, i); CRMD engines draw mode r from stream
/// (seed, kFieldMode, sample, r). Either way raising kappa leaves lower modes untouched.
class QfbmSampler {
 public:
  QfbmSampler(AngularPowerSpectrum spectrum, int kappa, HurstParameter hurst, TimeGrid grid,
              TemporalEngine engine, std::uint64_t seed);

  const AngularPowerSpectrum& spectrum() const { return spectrum_; }
  int kappa() const { return kappa_; }
  HurstParameter hurst() const { return hurst_; }
  const TimeGrid& time_grid() const { return grid_; }
  const TemporalEngine& engine() const { return engine_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t mode_count() const { return static_cast<std::int64_t>(kappa_ + 1) * (kappa_ + 1); }

  ModePaths draw(std::uint64_t sample) const;

  /// Like draw(), restricted to modes with first_degree <= l <= kappa (other rows are zero).
  ModePaths draw_degrees(std::uint64_t sample, int first_degree) const;

 private:
  AngularPowerSpectrum spectrum_;
  int kappa_;
  HurstParameter hurst_;
  TimeGrid grid_;
  TemporalEngine engine_;
  std::uint64_t seed_;
  std::optional<CePlan> ce_plan_;
  std::optional<CrmdPlan<double>> crmd_plan_;
  std::optional<CrmdExactPlan<double>> exact_plan_;
};

/// Values of the field on a grid at one time, ring-major (theta index outer).
struct FieldFrame {
  double t = 0.0;
  SphereGrid grid = SphereGrid::equiangular(1, 1);
  Eigen::MatrixXd values;  ///< n_theta x n_phi
};

/// B^kappa(t_j, .) on a grid: per ring a Legendre table and per-order sums, then a
/// longitude pass with cos/sin tables.
FieldFrame synthesize_frame(const AngularPowerSpectrum& spectrum, const ModePaths& paths,
                            Eigen::Index time_index, double t, const SphereGrid& grid);

/// B^kappa(t_j, x) at a single point.
double evaluate_field(const AngularPowerSpectrum& spectrum, const ModePaths& paths,
                      Eigen::Index time_index, const Direction& x);

/// Metadata written next to a frame file.
struct FrameHeader {
  int n_theta = 0;
  int n_phi = 0;
  double t = 0.0;
  double hurst = 0.0;
  int kappa = 0;
  std::uint64_t seed = 0;
  std::string grid_kind = "equiangular";
};

/// CSV with columns theta,phi,value (round-trip decimals).
void write_frame_csv(const FieldFrame& frame, const std::filesystem::path& path);
/// Flat little-endian float64 values, theta-major, plus `<path>.hdr` text sidecar.
void write_frame_binary(const FieldFrame& frame, const FrameHeader& header,
                        const std::filesystem::path& path);
/// Reads a binary frame written by write_frame_binary (header from the sidecar).
std::pair<FrameHeader, Eigen::MatrixXd> read_frame_binary(const std::filesystem::path& path);

}  // namespace qfbm
