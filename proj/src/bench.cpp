#include <algorithm>
#include <chrono>
#include <cmath>
#include <span>
#include <stdexcept>

#include "qfbm/circulant_embedding.hpp"
#include "qfbm/crmd.hpp"
#include "qfbm/harness.hpp"
#include "qfbm/random.hpp"

namespace qfbm {

std::string BenchMethod::label() const {
  return kind == Kind::kCe ? std::string("ce") : "crmd(" + std::to_string(mu) + ")";
}

namespace {

using Clock = std::chrono::steady_clock;

template <typename Batch>
double median_seconds_per_path(int reps, std::int64_t paths_per_batch, Batch&& batch) {
  batch();  // warmup
  std::vector<double> per_path;
  per_path.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto start = Clock::now();
    batch();
    const std::chrono::duration<double> elapsed = Clock::now() - start;
    per_path.push_back(elapsed.count() / static_cast<double>(paths_per_batch));
  }
  std::sort(per_path.begin(), per_path.end());
  const std::size_t mid = per_path.size() / 2;
  return per_path.size() % 2 ? per_path[mid] : 0.5 * (per_path[mid - 1] + per_path[mid]);
}

int log2_exact(std::int64_t n) {
  if (n < 2 || (n & (n - 1)) != 0) throw std::domain_error("CRMD timing needs N to be a power of two");
  int levels = 0;
  while ((std::int64_t{1} << levels) < n) ++levels;
  return levels;
}

}  // namespace

std::vector<TimingRow> bench(const std::vector<BenchMethod>& methods, const std::vector<std::int64_t>& steps,
                             int reps, std::uint64_t seed, HurstParameter hurst) {
  if (reps < 1) throw std::domain_error("need at least one timed rep");
  std::vector<TimingRow> rows;
  volatile double sink = 0.0;
  for (const std::int64_t n : steps) {
    // Enough paths per batch that the clock resolution does not matter.
    const std::int64_t batch_paths = std::max<std::int64_t>(1, (std::int64_t{1} << 20) / n);
    for (const auto& method : methods) {
      GaussianStream stream(seed, stream_id(StreamPurpose::kBench, {static_cast<std::uint64_t>(n),
                                                                    static_cast<std::uint64_t>(method.mu)}));
      TimingRow row;
      row.method = method.kind == BenchMethod::Kind::kCe ? "ce" : "crmd";
      row.mu = method.mu;
      row.steps = n;
      row.reps = reps;
      if (method.kind == BenchMethod::Kind::kCe) {
        const CePlan plan = build_ce_plan(n, hurst, 1.0 / static_cast<double>(n));
        CeWorkspace work;
        // Each FFT yields two paths.
        const std::int64_t pairs = std::max<std::int64_t>(1, batch_paths / 2);
        row.seconds_per_path = median_seconds_per_path(reps, 2 * pairs, [&] {
          for (std::int64_t i = 0; i < pairs; ++i) {
            const auto [a, b] = sample_ce_pair(plan, stream, work);
            sink = sink + increments_to_path(a)[n] + increments_to_path(b)[n];
          }
        });
        row.stored_reals = static_cast<std::uint64_t>(6 * n - 6);
      } else {
        const CrmdPlan<double> plan(hurst, log2_exact(n), method.mu, std::nullopt, 1.0);
        CrmdWorkspace<double> work;
        std::vector<double> path(static_cast<std::size_t>(n + 1));
        row.seconds_per_path = median_seconds_per_path(reps, batch_paths, [&] {
          for (std::int64_t i = 0; i < batch_paths; ++i) {
            sample_crmd(plan, stream, work, std::span<double>(path));
            sink = sink + path.back();
          }
        });
        row.stored_reals = static_cast<std::uint64_t>(2 * n) + plan.table_size();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

ComplexityFit fit_complexity(const std::vector<std::int64_t>& steps, const std::vector<double>& seconds) {
  if (steps.size() != seconds.size() || steps.size() < 3) {
    throw std::invalid_argument("complexity fit needs at least three timings");
  }
  std::vector<double> x(steps.begin(), steps.end());
  ComplexityFit out;
  out.slope = fit_loglog(x, seconds).slope;
  // Fixed-shape models t = c f(N): the best c is the geometric mean of t / f(N), and the
  // residual is the spread of log(t / f(N)).
  auto spread = [&](auto model) {
    std::vector<double> r;
    for (std::size_t i = 0; i < x.size(); ++i) r.push_back(std::log(seconds[i] / model(x[i])));
    double mean = 0.0;
    for (const double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double ss = 0.0;
    for (const double v : r) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(r.size()));
  };
  out.residual_linear = spread([](double n) { return n; });
  out.residual_nlogn = spread([](double n) { return n * std::log(n); });
  return out;
}

}  // namespace qfbm
