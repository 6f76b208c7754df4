#include "qfbm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>

#include "qfbm/csv.hpp"
#include "qfbm/random.hpp"

namespace qfbm {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    carry_ += (sum_ - t) + x;
  } else {
    carry_ += (x - t) + sum_;
  }
  sum_ = t;
}

void run_groups(std::size_t groups, unsigned threads, const std::function<void(std::size_t)>& task) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = static_cast<unsigned>(std::min<std::size_t>(threads, groups));
  if (workers <= 1) {
    for (std::size_t g = 0; g < groups; ++g) task(g);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t g = next++; g < groups; g = next++) {
        try {
          task(g);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = groups;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::size_t group_count(std::uint64_t samples) {
  return static_cast<std::size_t>(std::min<std::uint64_t>(samples, 100));
}

std::pair<std::uint64_t, std::uint64_t> group_range(std::size_t group, std::size_t groups, std::uint64_t samples) {
  const auto lo = samples * group / groups;
  const auto hi = samples * (group + 1) / groups;
  return {lo, hi};
}

namespace {

struct JackknifeResult {
  std::vector<double> estimate;
  std::vector<double> stderrs;
};

// `sums[g]` holds per-group sums of each accumulated quantity; `stat` maps sample means
// to the reported statistics.
JackknifeResult jackknife(const std::vector<std::vector<double>>& sums, std::uint64_t samples,
                          const std::function<std::vector<double>(const std::vector<double>&)>& stat) {
  const std::size_t groups = sums.size();
  const std::size_t width = sums.front().size();
  std::vector<double> total(width);
  for (std::size_t d = 0; d < width; ++d) {
    CompensatedSum acc;
    for (std::size_t g = 0; g < groups; ++g) acc.add(sums[g][d]);
    total[d] = acc.value();
  }
  std::vector<double> means(width);
  for (std::size_t d = 0; d < width; ++d) means[d] = total[d] / static_cast<double>(samples);

  JackknifeResult out;
  out.estimate = stat(means);
  out.stderrs.assign(out.estimate.size(), 0.0);
  if (groups < 2) return out;

  std::vector<std::vector<double>> leave_out(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    const auto [lo, hi] = group_range(g, groups, samples);
    const auto rest = static_cast<double>(samples - (hi - lo));
    for (std::size_t d = 0; d < width; ++d) means[d] = (total[d] - sums[g][d]) / rest;
    leave_out[g] = stat(means);
  }
  const double factor = static_cast<double>(groups - 1) / static_cast<double>(groups);
  for (std::size_t k = 0; k < out.estimate.size(); ++k) {
    CompensatedSum mean;
    for (const auto& v : leave_out) mean.add(v[k]);
    const double centre = mean.value() / static_cast<double>(groups);
    CompensatedSum dev;
    for (const auto& v : leave_out) dev.add((v[k] - centre) * (v[k] - centre));
    out.stderrs[k] = std::sqrt(factor * dev.value());
  }
  return out;
}

}  // namespace

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog needs equal-length inputs");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) throw std::domain_error("log-log fit needs at least two positive points");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::domain_error("log-log fit needs distinct abscissae");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  fit.points = lx.size();
  return fit;
}

RateFit fit_rate(const ErrorCurve& curve, int s) {
  if (curve.mu_values.size() != curve.errors.size()) throw std::invalid_argument("malformed error curve");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < curve.mu_values.size(); ++i) {
    const int mu = curve.mu_values[i];
    if (mu >= s && mu <= kRateWindowEnd && curve.errors[i] > 0.0) {
      x.push_back(mu);
      y.push_back(curve.errors[i]);
    }
  }
  if (x.size() < 3) throw std::domain_error("rate fit needs at least three points with mu in [s, 128] and error > 0");
  const LogLogFit fit = fit_loglog(x, y);
  return RateFit{-fit.slope, s, fit.intercept, fit.residual};
}

ErrorCurve crmd_error_curve(HurstParameter hurst, int levels, const std::vector<int>& mu_values,
                            std::uint64_t samples, std::uint64_t seed, unsigned threads) {
  if (samples == 0) throw std::domain_error("need at least one sample");
  if (mu_values.empty()) throw std::domain_error("need at least one mu");
  const CrmdExactPlan<double> reference(hurst, levels, 1.0);
  const std::int64_t n = reference.steps();
  std::vector<CrmdPlan<double>> plans;
  plans.reserve(mu_values.size());
  for (const int mu : mu_values) {
    if (mu < 0) throw std::domain_error("mu must be nonnegative");
    if (mu >= n) throw std::domain_error("mu must be below N; at mu >= N CRMD is the reference itself");
    plans.emplace_back(hurst, levels, mu, std::nullopt, 1.0);
  }

  const std::size_t points = static_cast<std::size_t>(n + 1);
  const std::size_t width = plans.size() * points;
  const std::size_t groups = group_count(samples);
  std::vector<std::vector<double>> sums(groups, std::vector<double>(width, 0.0));

  run_groups(groups, threads, [&](std::size_t g) {
    CrmdWorkspace<double> work;
    std::vector<double> ref(points), approx(points);
    auto& acc = sums[g];
    const auto [lo, hi] = group_range(g, groups, samples);
    for (std::uint64_t i = lo; i < hi; ++i) {
      GaussianStream stream(seed, stream_id(StreamPurpose::kCrmdError, {i}));
      const std::vector<double> z = draw_normals(stream, static_cast<std::size_t>(n));
      ReplaySource replay_ref(z);
      sample_crmd_exact(reference, replay_ref, work, std::span<double>(ref));
      for (std::size_t k = 0; k < plans.size(); ++k) {
        ReplaySource replay(z);
        sample_crmd(plans[k], replay, work, std::span<double>(approx));
        double* row = acc.data() + k * points;
        for (std::size_t j = 0; j < points; ++j) {
          const double d = approx[j] - ref[j];
          row[j] += d * d;
        }
      }
    }
  });

  const auto result = jackknife(sums, samples, [&](const std::vector<double>& means) {
    std::vector<double> errors(plans.size());
    for (std::size_t k = 0; k < plans.size(); ++k) {
      double worst = 0.0;
      for (std::size_t j = 0; j < points; ++j) worst = std::max(worst, means[k * points + j]);
      errors[k] = std::sqrt(worst);
    }
    return errors;
  });

  ErrorCurve curve;
  curve.hurst = hurst.value();
  curve.steps = n;
  curve.mu_values = mu_values;
  curve.errors = result.estimate;
  curve.stderrs = result.stderrs;
  curve.samples = samples;
  curve.seed = seed;
  return curve;
}

TruncationExperiment truncation_rate_experiment(const AngularPowerSpectrum& spectrum, HurstParameter hurst,
                                                const std::vector<int>& kappa_values, double t,
                                                std::uint64_t samples, std::uint64_t seed,
                                                std::optional<int> kappa_ref, unsigned threads) {
  if (!spectrum.is_power_law() || !(spectrum.alpha() > 2.0)) {
    throw std::domain_error("truncation experiment needs a power-law spectrum with alpha > 2");
  }
  if (kappa_values.empty()) throw std::domain_error("need at least one kappa");
  if (samples == 0) throw std::domain_error("need at least one sample");
  if (!(t > 0.0) || !std::isfinite(t)) throw std::domain_error("time must be positive");
  const int kappa_min = *std::min_element(kappa_values.begin(), kappa_values.end());
  const int kappa_max = *std::max_element(kappa_values.begin(), kappa_values.end());
  if (kappa_min < 0) throw std::domain_error("kappa must be nonnegative");
  const int ref = kappa_ref.value_or(4 * std::max(kappa_max, 1));
  if (ref <= kappa_max) throw std::domain_error("kappa_ref must exceed every kappa");

  const QfbmSampler sampler(spectrum, ref, hurst, TimeGrid(t, 2), CeEngine{}, seed);
  const std::size_t width = kappa_values.size();
  const std::size_t groups = group_count(samples);
  std::vector<std::vector<double>> sums(groups, std::vector<double>(width, 0.0));

  run_groups(groups, threads, [&](std::size_t g) {
    std::vector<double> degree_energy(static_cast<std::size_t>(ref) + 2, 0.0);
    const auto [lo, hi] = group_range(g, groups, samples);
    for (std::uint64_t i = lo; i < hi; ++i) {
      const ModePaths paths = sampler.draw_degrees(i, kappa_min + 1);
      // Suffix sums over degrees: energy above l.
      degree_energy[static_cast<std::size_t>(ref) + 1] = 0.0;
      for (int l = ref; l > kappa_min; --l) {
        double e = 0.0;
        for (int m = -l; m <= l; ++m) {
          const double b = paths(l, m, 2);
          e += b * b;
        }
        degree_energy[static_cast<std::size_t>(l)] = degree_energy[static_cast<std::size_t>(l) + 1] + spectrum(l) * e;
      }
      for (std::size_t k = 0; k < width; ++k) {
        sums[g][k] += degree_energy[static_cast<std::size_t>(kappa_values[k]) + 1];
      }
    }
  });

  const auto result = jackknife(sums, samples, [](const std::vector<double>& means) {
    std::vector<double> out(means.size());
    for (std::size_t k = 0; k < means.size(); ++k) out[k] = std::sqrt(std::max(means[k], 0.0));
    return out;
  });

  TruncationExperiment ex;
  ex.hurst = hurst.value();
  ex.t = t;
  ex.kappa_ref = ref;
  ex.kappa_values = kappa_values;
  ex.mc_errors = result.estimate;
  ex.stderrs = result.stderrs;
  ex.samples = samples;
  ex.seed = seed;
  const double time_factor = std::pow(t, hurst.exponent());
  std::vector<double> x;
  for (const int kappa : kappa_values) {
    ex.exact_errors.push_back(std::sqrt(time_factor * weighted_sum(spectrum, kappa + 1, ref)));
    ex.tail_errors.push_back(truncation_error_exact(spectrum, kappa, t, hurst));
    x.push_back(kappa);
  }
  if (kappa_values.size() >= 2) {
    ex.mc_fit = fit_loglog(x, ex.mc_errors);
    ex.tail_fit = fit_loglog(x, ex.tail_errors);
  }
  return ex;
}

void write_error_curve_csv(const ErrorCurve& curve, const std::filesystem::path& path) {
  write_atomically(path, [&](std::ofstream& out) {
    out << "mu,error,stderr\n";
    for (std::size_t i = 0; i < curve.mu_values.size(); ++i) {
      out << curve.mu_values[i] << ',' << format_real(curve.errors[i]) << ',' << format_real(curve.stderrs[i])
          << '\n';
    }
  });
}

void write_rate_fits_csv(const std::vector<std::pair<ErrorCurve, RateFit>>& fits, const std::filesystem::path& path) {
  write_atomically(path, [&](std::ofstream& out) {
    out << "H,s,r_H,residual\n";
    for (const auto& [curve, fit] : fits) {
      out << format_real(curve.hurst) << ',' << fit.s << ',' << format_real(fit.r_h) << ','
          << format_real(fit.residual) << '\n';
    }
  });
}

void write_truncation_csv(const TruncationExperiment& ex, const std::filesystem::path& path) {
  write_atomically(path, [&](std::ofstream& out) {
    out << "kappa,error,stderr,exact,tail\n";
    for (std::size_t i = 0; i < ex.kappa_values.size(); ++i) {
      out << ex.kappa_values[i] << ',' << format_real(ex.mc_errors[i]) << ',' << format_real(ex.stderrs[i]) << ','
          << format_real(ex.exact_errors[i]) << ',' << format_real(ex.tail_errors[i]) << '\n';
    }
  });
}

void write_timings_csv(const std::vector<TimingRow>& rows, const std::filesystem::path& path) {
  write_atomically(path, [&](std::ofstream& out) {
    out << "method,mu,N,seconds_per_path\n";
    for (const auto& r : rows) {
      out << r.method << ',' << r.mu << ',' << r.steps << ',' << format_real(r.seconds_per_path) << '\n';
    }
  });
}

}  // namespace qfbm
