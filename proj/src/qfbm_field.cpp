#include "qfbm/qfbm_field.hpp"

#include <cmath>
#include <algorithm>
#include <numbers>
#include <span>
#include <stdexcept>

namespace qfbm {

std::string engine_name(const TemporalEngine& engine) {
  struct Visitor {
    std::string operator()(const CeEngine&) const { return "ce"; }
    std::string operator()(const CrmdEngine&) const { return "crmd"; }
    std::string operator()(const CrmdExactEngine&) const { return "crmd-exact"; }
  };
  return std::visit(Visitor{}, engine);
}

namespace {

int dyadic_levels(std::int64_t steps) {
  if (steps < 2 || (steps & (steps - 1)) != 0) {
    throw std::domain_error("CRMD needs N to be a power of two, N >= 2");
  }
  int levels = 0;
  while ((std::int64_t{1} << levels) < steps) ++levels;
  return levels;
}

}  // namespace

QfbmSampler::QfbmSampler(AngularPowerSpectrum spectrum, int kappa, HurstParameter hurst, TimeGrid grid,
                         TemporalEngine engine, std::uint64_t seed)
    : spectrum_(std::move(spectrum)), kappa_(kappa), hurst_(hurst), grid_(grid), engine_(engine), seed_(seed) {
  if (kappa < 0) throw std::domain_error("kappa must be nonnegative");
  if (std::holds_alternative<CeEngine>(engine_)) {
    if (grid_.steps() < 2) throw std::domain_error("circulant embedding needs N >= 2");
    ce_plan_.emplace(build_ce_plan(grid_.steps(), hurst_, grid_.step()));
  } else if (const auto* crmd = std::get_if<CrmdEngine>(&engine_)) {
    crmd_plan_.emplace(hurst_, dyadic_levels(grid_.steps()), crmd->mu, crmd->nu, grid_.horizon());
  } else {
    exact_plan_.emplace(hurst_, dyadic_levels(grid_.steps()), grid_.horizon());
  }
}

ModePaths QfbmSampler::draw(std::uint64_t sample) const { return draw_degrees(sample, 0); }

ModePaths QfbmSampler::draw_degrees(std::uint64_t sample, int first_degree) const {
  const Eigen::Index steps = grid_.steps();
  ModePaths out;
  out.kappa = kappa_;
  out.values = Eigen::MatrixXd::Zero(mode_count(), steps + 1);
  const Eigen::Index first_row = ModePaths::row(std::max(first_degree, 0), -std::max(first_degree, 0));
  const Eigen::Index rows = mode_count();

  if (ce_plan_) {
    CeWorkspace work;
    for (Eigen::Index pair = first_row / 2; 2 * pair < rows; ++pair) {
      GaussianStream stream(seed_, stream_id(StreamPurpose::kFieldMode, {sample, static_cast<std::uint64_t>(pair)}));
      const auto [re, im] = sample_ce_pair(*ce_plan_, stream, work);
      if (2 * pair >= first_row) out.values.row(2 * pair) = increments_to_path(re).transpose();
      if (2 * pair + 1 < rows) out.values.row(2 * pair + 1) = increments_to_path(im).transpose();
    }
    return out;
  }

  CrmdWorkspace<double> work;
  Eigen::VectorXd path(steps + 1);
  for (Eigen::Index r = first_row; r < rows; ++r) {
    GaussianStream stream(seed_, stream_id(StreamPurpose::kFieldMode, {sample, static_cast<std::uint64_t>(r)}));
    std::span<double> view(path.data(), static_cast<std::size_t>(path.size()));
    if (crmd_plan_) {
      sample_crmd(*crmd_plan_, stream, work, view);
    } else {
      sample_crmd_exact(*exact_plan_, stream, work, view);
    }
    out.values.row(r) = path.transpose();
  }
  return out;
}

FieldFrame synthesize_frame(const AngularPowerSpectrum& spectrum, const ModePaths& paths,
                            Eigen::Index time_index, double t, const SphereGrid& grid) {
  const int kappa = paths.kappa;
  if (time_index < 0 || time_index >= paths.values.cols()) throw std::out_of_range("time index out of range");

  // Coefficients sqrt(A_l) beta_{l,m}(t_j).
  Eigen::VectorXd coeff(paths.values.rows());
  for (int l = 0; l <= kappa; ++l) {
    const double amp = std::sqrt(spectrum(l));
    for (int m = -l; m <= l; ++m) coeff[ModePaths::row(l, m)] = amp * paths(l, m, time_index);
  }

  const int n_phi = grid.n_phi();
  // Longitude tables: cos(m phi_j), sin(m phi_j) scaled by sqrt2 for m >= 1.
  Eigen::MatrixXd cos_table(kappa + 1, n_phi), sin_table(kappa + 1, n_phi);
  for (int m = 0; m <= kappa; ++m) {
    const double w = m == 0 ? 1.0 : std::numbers::sqrt2;
    for (int j = 0; j < n_phi; ++j) {
      cos_table(m, j) = w * std::cos(m * grid.phi(j));
      sin_table(m, j) = w * std::sin(m * grid.phi(j));
    }
  }

  FieldFrame frame{t, grid, Eigen::MatrixXd(grid.n_theta(), n_phi)};
  NormalizedLegendre<double> legendre(kappa);
  Eigen::VectorXd a(kappa + 1), b(kappa + 1);
  for (int i = 0; i < grid.n_theta(); ++i) {
    legendre.evaluate(grid.theta(i));
    a.setZero();
    b.setZero();
    for (int m = 0; m <= kappa; ++m) {
      for (int l = m; l <= kappa; ++l) {
        const double p = legendre(l, m);
        a[m] += p * coeff[ModePaths::row(l, m)];
        if (m > 0) b[m] += p * coeff[ModePaths::row(l, -m)];
      }
    }
    frame.values.row(i) = a.transpose() * cos_table + b.transpose() * sin_table;
  }
  return frame;
}

double evaluate_field(const AngularPowerSpectrum& spectrum, const ModePaths& paths,
                      Eigen::Index time_index, const Direction& x) {
  const int kappa = paths.kappa;
  NormalizedLegendre<double> legendre(kappa);
  legendre.evaluate(x.theta);
  double sum = 0.0;
  for (int l = 0; l <= kappa; ++l) {
    double degree = legendre(l, 0) * paths(l, 0, time_index);
    for (int m = 1; m <= l; ++m) {
      const double p = std::numbers::sqrt2 * legendre(l, m);
      degree += p * (std::cos(m * x.phi) * paths(l, m, time_index) + std::sin(m * x.phi) * paths(l, -m, time_index));
    }
    sum += std::sqrt(spectrum(l)) * degree;
  }
  return sum;
}

}  // namespace qfbm
