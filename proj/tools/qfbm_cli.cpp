// qfbm: sample fBm paths and Q-fBm fields on the sphere, and run the convergence and
// timing experiments. Every output gets a `<out>.meta.json` (or `meta.json` inside an
// output directory) with the full configuration and the argv that reproduces it.

#include <CLI11.hpp>
#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qfbm/circulant_embedding.hpp"
#include "qfbm/crmd.hpp"
#include "qfbm/csv.hpp"
#include "qfbm/harness.hpp"
#include "qfbm/qfbm_field.hpp"
#include "qfbm/random.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitEmbedding = 3;

struct Options {
  std::string method = "ce";
  std::vector<double> hurst;
  std::int64_t steps = 0;
  double horizon = 0.0;
  std::vector<int> mu;
  std::optional<int> nu;
  std::vector<int> kappa;
  std::optional<int> kappa_ref;
  double alpha = 4.0;
  double scale = 1.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  unsigned threads = 0;
  std::vector<double> times;
  std::string grid = "equiangular";
  int n_theta = 64;
  int n_phi = 128;
  std::vector<int> fit_s;
  std::vector<std::int64_t> steps_list;
  std::vector<std::string> methods;
  int reps = 5;
};

int levels_of(std::int64_t n) {
  if (n < 2 || (n & (n - 1)) != 0) throw std::domain_error("N must be a power of two >= 2 for CRMD");
  int levels = 0;
  while ((std::int64_t{1} << levels) < n) ++levels;
  return levels;
}

double single_hurst(const Options& o) {
  if (o.hurst.size() != 1) throw std::domain_error("exactly one --H value expected");
  return o.hurst.front();
}

void write_meta(const fs::path& path, const std::string& command, const json& config,
                const std::vector<std::string>& argv, const std::vector<std::string>& files) {
  json meta;
  meta["command"] = command;
  meta["seed"] = config.value("seed", std::uint64_t{0});
  meta["config"] = config;
  meta["argv"] = argv;
  meta["files"] = files;
  qfbm::write_atomically(path, [&](std::ofstream& out) { out << meta.dump(2) << '\n'; });
}

fs::path sidecar_for(const fs::path& out) { return fs::path(out.string() + ".meta.json"); }

void check_format(const Options& o) {
  if (o.format != "csv" && o.format != "bin") throw std::domain_error("--format must be csv or bin");
}

// Paths for `samples` realizations. CE samples 2i and 2i+1 come from one embedding draw.
std::vector<Eigen::VectorXd> sample_paths(const Options& o) {
  const qfbm::HurstParameter hurst(single_hurst(o));
  const qfbm::TimeGrid grid(o.horizon, o.steps);
  std::vector<Eigen::VectorXd> paths;
  paths.reserve(o.samples);
  auto stream_for = [&](std::uint64_t s) {
    return qfbm::GaussianStream(o.seed, qfbm::stream_id(qfbm::StreamPurpose::kPath, {s}));
  };
  if (o.method == "ce") {
    if (o.steps < 2) throw std::domain_error("circulant embedding needs N >= 2");
    const qfbm::CePlan plan = qfbm::build_ce_plan(o.steps, hurst, grid.step());
    qfbm::CeWorkspace work;
    for (std::uint64_t s = 0; s < o.samples; s += 2) {
      auto stream = stream_for(s / 2);
      const auto [re, im] = qfbm::sample_ce_pair(plan, stream, work);
      paths.push_back(qfbm::increments_to_path(re));
      if (s + 1 < o.samples) paths.push_back(qfbm::increments_to_path(im));
    }
  } else if (o.method == "crmd") {
    const qfbm::CrmdPlan<double> plan(hurst, levels_of(o.steps), o.mu.front(), o.nu, o.horizon);
    for (std::uint64_t s = 0; s < o.samples; ++s) {
      auto stream = stream_for(s);
      paths.push_back(qfbm::sample_crmd(plan, stream));
    }
  } else if (o.method == "crmd-exact") {
    const qfbm::CrmdExactPlan<double> plan(hurst, levels_of(o.steps), o.horizon);
    for (std::uint64_t s = 0; s < o.samples; ++s) {
      auto stream = stream_for(s);
      paths.push_back(qfbm::sample_crmd_exact(plan, stream));
    }
  } else {
    throw std::domain_error("--method must be ce, crmd or crmd-exact");
  }
  return paths;
}

json common_config(const Options& o) {
  json c;
  c["seed"] = o.seed;
  return c;
}

void cmd_fbm(const Options& o, const std::vector<std::string>& argv) {
  check_format(o);
  const double h = single_hurst(o);
  (void)qfbm::HurstParameter(h);
  if (o.steps < 1) throw std::domain_error("N must be positive");
  if (!(o.horizon > 0.0) || !std::isfinite(o.horizon)) throw std::domain_error("T must be positive");
  if (o.samples < 1) throw std::domain_error("--samples must be at least 1");
  if (o.mu.size() != 1 || o.mu.front() < 0) throw std::domain_error("exactly one nonnegative --mu expected");
  if (o.nu && *o.nu < 0) throw std::domain_error("--nu must be nonnegative");

  const auto paths = sample_paths(o);
  const qfbm::TimeGrid grid(o.horizon, o.steps);
  const fs::path out(o.out);
  if (o.format == "csv") {
    qfbm::write_atomically(out, [&](std::ofstream& f) {
      f << "t";
      if (paths.size() == 1) {
        f << ",value";
      } else {
        for (std::size_t s = 0; s < paths.size(); ++s) f << ",value_" << s;
      }
      f << '\n';
      for (std::int64_t j = 0; j <= o.steps; ++j) {
        f << qfbm::format_real(grid.time(j));
        for (const auto& p : paths) f << ',' << qfbm::format_real(p[j]);
        f << '\n';
      }
    });
  } else {
    // Sample-major little-endian float64, N + 1 values per path.
    qfbm::write_atomically(
        out,
        [&](std::ofstream& f) {
          for (const auto& p : paths) {
            for (Eigen::Index j = 0; j < p.size(); ++j) {
              auto bits = std::bit_cast<std::uint64_t>(p[j]);
              char bytes[8];
              for (char& b : bytes) {
                b = static_cast<char>(bits & 0xFF);
                bits >>= 8;
              }
              f.write(bytes, 8);
            }
          }
        },
        std::ios::out | std::ios::binary);
  }

  json c = common_config(o);
  c["method"] = o.method;
  c["H"] = h;
  c["N"] = o.steps;
  c["T"] = o.horizon;
  if (o.method == "crmd") {
    c["mu"] = o.mu.front();
    c["nu"] = o.nu.value_or((o.mu.front() + 1) / 2);
  }
  c["samples"] = o.samples;
  c["format"] = o.format;
  if (o.format == "bin") c["layout"] = "float64-le, sample-major, N+1 values per path";
  write_meta(sidecar_for(out), "fbm", c, argv, {out.filename().string()});
}

void cmd_field(const Options& o, const std::vector<std::string>& argv) {
  check_format(o);
  const qfbm::HurstParameter hurst(single_hurst(o));
  if (o.kappa.size() != 1 || o.kappa.front() < 0) throw std::domain_error("exactly one nonnegative --kappa expected");
  if (o.times.empty()) throw std::domain_error("--times needs at least one time");
  for (const double t : o.times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::domain_error("times must be nonnegative");
  }
  if (o.n_theta < 1 || o.n_phi < 1) throw std::domain_error("grid sizes must be positive");
  if (o.samples < 1) throw std::domain_error("--samples must be at least 1");
  if (o.steps < 1) throw std::domain_error("N must be positive");
  const double t_max = *std::max_element(o.times.begin(), o.times.end());
  // Default horizon: the smallest power of two covering the times, so dyadic times are grid points.
  double horizon = o.horizon;
  if (!(horizon > 0.0)) {
    horizon = 1.0;
    while (horizon < t_max) horizon *= 2.0;
  }
  if (!std::isfinite(horizon) || t_max > horizon) throw std::domain_error("times must lie in [0, T]");
  const qfbm::TimeGrid time_grid(horizon, o.steps);
  std::vector<std::int64_t> indices;
  for (const double t : o.times) {
    const auto j = time_grid.index_of(t);
    if (j < 0) throw std::domain_error("time " + qfbm::format_real(t) + " is not on the grid T j / N");
    indices.push_back(j);
  }

  const auto spectrum = qfbm::AngularPowerSpectrum::power_law(o.scale, o.alpha);
  qfbm::TemporalEngine engine = qfbm::CeEngine{};
  if (o.method == "crmd") {
    if (o.mu.size() != 1 || o.mu.front() < 0) throw std::domain_error("exactly one nonnegative --mu expected");
    engine = qfbm::CrmdEngine{o.mu.front(), o.nu};
  } else if (o.method == "crmd-exact") {
    engine = qfbm::CrmdExactEngine{};
  } else if (o.method != "ce") {
    throw std::domain_error("--method must be ce, crmd or crmd-exact");
  }
  qfbm::SphereGrid grid = o.grid == "gauss" ? qfbm::SphereGrid::gauss_legendre(o.n_theta, o.n_phi)
                          : o.grid == "equiangular"
                              ? qfbm::SphereGrid::equiangular(o.n_theta, o.n_phi)
                              : throw std::domain_error("--grid must be equiangular or gauss");
  const qfbm::QfbmSampler sampler(spectrum, o.kappa.front(), hurst, time_grid, engine, o.seed);

  const fs::path dir(o.out);
  std::vector<std::string> files;
  std::vector<std::pair<fs::path, qfbm::FieldFrame>> frames;
  for (std::uint64_t s = 0; s < o.samples; ++s) {
    const qfbm::ModePaths paths = sampler.draw(s);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const std::string name = "frame_s" + std::to_string(s) + "_t" + std::to_string(i) + "." + o.format;
      frames.emplace_back(dir / name, qfbm::synthesize_frame(spectrum, paths, indices[i], time_grid.time(indices[i]), grid));
      files.push_back(name);
    }
  }
  for (const auto& [path, frame] : frames) {
    if (o.format == "csv") {
      qfbm::write_frame_csv(frame, path);
    } else {
      qfbm::FrameHeader header{o.n_theta, o.n_phi, frame.t, hurst.value(), o.kappa.front(), o.seed, o.grid};
      qfbm::write_frame_binary(frame, header, path);
    }
  }

  json c = common_config(o);
  c["method"] = o.method;
  c["H"] = hurst.value();
  c["kappa"] = o.kappa.front();
  c["alpha"] = o.alpha;
  c["C"] = o.scale;
  c["N"] = o.steps;
  c["T"] = horizon;
  c["times"] = o.times;
  c["grid"] = o.grid;
  c["n_theta"] = o.n_theta;
  c["n_phi"] = o.n_phi;
  c["samples"] = o.samples;
  c["format"] = o.format;
  write_meta(dir / "meta.json", "field", c, argv, files);
}

void cmd_rates(const Options& o, const std::vector<std::string>& argv) {
  if (o.hurst.empty()) throw std::domain_error("--H needs at least one value");
  std::vector<qfbm::HurstParameter> hursts;
  for (const double h : o.hurst) hursts.emplace_back(h);
  const int levels = levels_of(o.steps);
  if (o.samples < 1) throw std::domain_error("--samples must be at least 1");
  std::vector<int> mus = o.mu;
  if (mus.empty()) {
    mus.resize(static_cast<std::size_t>(std::min<std::int64_t>(128, o.steps - 1)));
    std::iota(mus.begin(), mus.end(), 1);
  }
  for (const int mu : mus) {
    if (mu < 0 || mu >= o.steps) throw std::domain_error("every mu must satisfy 0 <= mu < N");
  }

  const fs::path dir(o.out);
  std::vector<std::string> files;
  std::vector<std::pair<qfbm::ErrorCurve, qfbm::RateFit>> fits;
  for (const auto& hurst : hursts) {
    const auto curve = qfbm::crmd_error_curve(hurst, levels, mus, o.samples, o.seed, o.threads);
    const std::string name = "error_curve_H" + qfbm::format_real(hurst.value()) + ".csv";
    qfbm::write_error_curve_csv(curve, dir / name);
    files.push_back(name);
    for (const int s : o.fit_s) fits.emplace_back(curve, qfbm::fit_rate(curve, s));
  }
  qfbm::write_rate_fits_csv(fits, dir / "rates.csv");
  files.push_back("rates.csv");
  for (const auto& [curve, fit] : fits) {
    std::cout << "H=" << qfbm::format_real(curve.hurst) << " s=" << fit.s << " r_H=" << qfbm::format_real(fit.r_h)
              << '\n';
  }

  json c = common_config(o);
  c["H"] = o.hurst;
  c["N"] = o.steps;
  c["T"] = 1.0;
  c["mu"] = mus;
  c["nu"] = "ceil(mu/2)";
  c["samples"] = o.samples;
  c["s"] = o.fit_s;
  c["threads"] = o.threads;
  write_meta(dir / "meta.json", "rates", c, argv, files);
}

void cmd_trunc(const Options& o, const std::vector<std::string>& argv) {
  const qfbm::HurstParameter hurst(single_hurst(o));
  const auto spectrum = qfbm::AngularPowerSpectrum::power_law(o.scale, o.alpha);
  const double t = o.horizon > 0.0 ? o.horizon : 1.0;
  if (o.samples < 1) throw std::domain_error("--samples must be at least 1");
  const auto ex = qfbm::truncation_rate_experiment(spectrum, hurst, o.kappa, t, o.samples, o.seed, o.kappa_ref,
                                                   o.threads);
  const fs::path out(o.out);
  qfbm::write_truncation_csv(ex, out);
  if (ex.kappa_values.size() >= 2) {
    std::cout << "slope(mc)=" << qfbm::format_real(ex.mc_fit.slope)
              << " slope(exact)=" << qfbm::format_real(ex.tail_fit.slope)
              << " predicted=" << qfbm::format_real(-qfbm::rate_formula(o.alpha, 3)) << '\n';
  }
  json c = common_config(o);
  c["H"] = hurst.value();
  c["alpha"] = o.alpha;
  c["C"] = o.scale;
  c["kappa"] = o.kappa;
  c["kappa_ref"] = ex.kappa_ref;
  c["t"] = t;
  c["samples"] = o.samples;
  c["threads"] = o.threads;
  c["slope_mc"] = ex.mc_fit.slope;
  c["slope_exact"] = ex.tail_fit.slope;
  write_meta(sidecar_for(out), "trunc", c, argv, {out.filename().string()});
}

void cmd_bench(const Options& o, const std::vector<std::string>& argv) {
  const qfbm::HurstParameter hurst(single_hurst(o));
  std::vector<qfbm::BenchMethod> methods;
  for (const auto& m : o.methods) {
    if (m == "ce") {
      methods.push_back({qfbm::BenchMethod::Kind::kCe, 0});
    } else if (m == "crmd") {
      for (const int mu : o.mu) {
        if (mu < 0) throw std::domain_error("mu must be nonnegative");
        methods.push_back({qfbm::BenchMethod::Kind::kCrmd, mu});
      }
    } else {
      throw std::domain_error("bench methods are ce and crmd");
    }
  }
  for (const auto n : o.steps_list) levels_of(n);
  const auto rows = qfbm::bench(methods, o.steps_list, o.reps, o.seed, hurst);
  const fs::path out(o.out);
  qfbm::write_timings_csv(rows, out);

  json c = common_config(o);
  c["H"] = hurst.value();
  c["methods"] = o.methods;
  c["mu"] = o.mu;
  c["N"] = o.steps_list;
  c["reps"] = o.reps;
  c["threads"] = 1;
  json memory = json::array();
  for (const auto& r : rows) {
    memory.push_back({{"method", r.method}, {"mu", r.mu}, {"N", r.steps}, {"stored_reals", r.stored_reals}});
  }
  c["memory"] = memory;
  c["note"] = "timings are hardware specific; plan construction is excluded";
  write_meta(sidecar_for(out), "bench", c, argv, {out.filename().string()});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional Brownian motion and Q-fBm on the sphere"};
  app.require_subcommand(1);
  // One option set per subcommand: CLI11 writes defaults into the bound variables as soon
  // as they are declared.
  Options fbm_o, field_o, rates_o, trunc_o, bench_o;

  auto* fbm = app.add_subcommand("fbm", "sample fBm paths");
  fbm->add_option("--method", fbm_o.method, "ce, crmd or crmd-exact")->capture_default_str();
  fbm->add_option("--H", fbm_o.hurst, "Hurst index in (0, 1)")->required()->expected(1);
  fbm->add_option("--N", fbm_o.steps, "number of time steps")->default_val(1024);
  fbm->add_option("--T", fbm_o.horizon, "time horizon")->default_val(1.0);
  fbm->add_option("--mu", fbm_o.mu, "CRMD fine window")->default_val(std::vector<int>{5})->expected(1);
  fbm->add_option("--nu", fbm_o.nu, "CRMD coarse window, default ceil(mu/2)");
  fbm->add_option("--samples", fbm_o.samples, "number of paths")->default_val(1);
  fbm->add_option("--seed", fbm_o.seed, "master seed")->default_val(0);
  fbm->add_option("--out", fbm_o.out, "output file")->required();
  fbm->add_option("--format", fbm_o.format, "csv or bin")->capture_default_str();
  fbm->add_option("--threads", fbm_o.threads, "worker cap (sampling here is sequential)")->default_val(1);

  auto* field = app.add_subcommand("field", "sample Q-fBm frames on the sphere");
  field->add_option("--method", field_o.method, "temporal sampler: ce, crmd or crmd-exact")->capture_default_str();
  field->add_option("--H", field_o.hurst, "Hurst index in (0, 1)")->required()->expected(1);
  field->add_option("--N", field_o.steps, "time steps on [0, T]")->default_val(64);
  field->add_option("--T", field_o.horizon, "horizon (default: smallest power of two >= max time)")->default_val(0.0);
  field->add_option("--mu", field_o.mu, "CRMD fine window")->default_val(std::vector<int>{5})->expected(1);
  field->add_option("--nu", field_o.nu, "CRMD coarse window");
  field->add_option("--kappa", field_o.kappa, "truncation degree")->required()->expected(1);
  field->add_option("--alpha", field_o.alpha, "power-law exponent of A_l = C (1 + l)^-alpha")->capture_default_str();
  field->add_option("--C", field_o.scale, "power-law scale")->capture_default_str();
  field->add_option("--times", field_o.times, "frame times (grid points)")->delimiter(',')->default_val(std::vector<double>{1.0});
  field->add_option("--grid", field_o.grid, "equiangular or gauss")->capture_default_str();
  field->add_option("--ntheta", field_o.n_theta, "rings")->capture_default_str();
  field->add_option("--nphi", field_o.n_phi, "points per ring")->capture_default_str();
  field->add_option("--samples", field_o.samples, "independent realizations")->default_val(1);
  field->add_option("--seed", field_o.seed, "master seed")->default_val(0);
  field->add_option("--out", field_o.out, "output directory")->required();
  field->add_option("--format", field_o.format, "csv or bin")->capture_default_str();
  field->add_option("--threads", field_o.threads, "worker cap (synthesis here is sequential)")->default_val(1);

  auto* rates = app.add_subcommand("rates", "CRMD error versus mu and fitted decay rates");
  rates->add_option("--H", rates_o.hurst, "Hurst indices")->delimiter(',')->default_val(std::vector<double>{0.3, 0.8});
  rates->add_option("--N", rates_o.steps, "path length (power of two)")->default_val(512);
  rates->add_option("--mu", rates_o.mu, "mu values (default 1..128)")->delimiter(',');
  rates->add_option("--samples", rates_o.samples, "Monte Carlo samples")->default_val(10000);
  rates->add_option("--s", rates_o.fit_s, "lower ends of the fit window")->delimiter(',')->default_val(std::vector<int>{10, 20, 50});
  rates->add_option("--seed", rates_o.seed, "master seed")->default_val(0);
  rates->add_option("--threads", rates_o.threads, "worker cap (0 = all cores)")->default_val(0);
  rates->add_option("--out", rates_o.out, "output directory")->required();

  auto* trunc = app.add_subcommand("trunc", "truncation error of the spherical expansion");
  trunc->add_option("--H", trunc_o.hurst, "Hurst index")->default_val(std::vector<double>{0.8})->expected(1);
  trunc->add_option("--alpha", trunc_o.alpha, "power-law exponent")->capture_default_str();
  trunc->add_option("--C", trunc_o.scale, "power-law scale")->capture_default_str();
  trunc->add_option("--kappa", trunc_o.kappa, "truncation degrees")->delimiter(',')->default_val(std::vector<int>{8, 16, 32, 64});
  trunc->add_option("--kappa-ref", trunc_o.kappa_ref, "reference degree (default 4 max kappa)");
  trunc->add_option("--T", trunc_o.horizon, "time t at which the error is measured")->default_val(1.0);
  trunc->add_option("--samples", trunc_o.samples, "Monte Carlo samples")->default_val(10000);
  trunc->add_option("--seed", trunc_o.seed, "master seed")->default_val(0);
  trunc->add_option("--threads", trunc_o.threads, "worker cap (0 = all cores)")->default_val(0);
  trunc->add_option("--out", trunc_o.out, "output CSV")->required();

  auto* bench = app.add_subcommand("bench", "single-threaded timing of CE and CRMD");
  bench->add_option("--method", bench_o.methods, "methods")->delimiter(',')->default_val(std::vector<std::string>{"ce", "crmd"});
  bench->add_option("--H", bench_o.hurst, "Hurst index")->default_val(std::vector<double>{0.7})->expected(1);
  bench->add_option("--mu", bench_o.mu, "CRMD windows")->delimiter(',')->default_val(std::vector<int>{5});
  bench->add_option("--N", bench_o.steps_list, "path lengths")->delimiter(',')->default_val(
      std::vector<std::int64_t>{1 << 15, 1 << 16, 1 << 17, 1 << 18, 1 << 19, 1 << 20});
  bench->add_option("--reps", bench_o.reps, "timed reps per point")->capture_default_str();
  bench->add_option("--seed", bench_o.seed, "master seed")->default_val(0);
  bench->add_option("--out", bench_o.out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (fbm->parsed()) cmd_fbm(fbm_o, args);
    if (field->parsed()) cmd_field(field_o, args);
    if (rates->parsed()) cmd_rates(rates_o, args);
    if (trunc->parsed()) cmd_trunc(trunc_o, args);
    if (bench->parsed()) cmd_bench(bench_o, args);
  } catch (const qfbm::EmbeddingError& e) {
    std::cerr << "embedding failure: " << e.what() << '\n';
    return kExitEmbedding;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return 0;
}
