#pragma once

// Counter-based random streams. A master seed is split into independent named substreams
// (temporal modes, Monte Carlo samples) without any shared state, so samples can be
// produced in any order and on any number of workers with bit-identical results.

#include <array>
#include <concepts>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace qfbm {

/// Anything that yields i.i.d. standard normal variates on each call.
template <typename G>
concept GaussianSource = requires(G& g) {
  { g() } -> std::convertible_to<double>;
};

/// Philox4x32-10 block cipher (Salmon et al., Random123).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter encrypt(Counter counter, Key key);
};

/// Tags for the named substreams derived from a master seed.
enum class StreamPurpose : std::uint64_t {
  kPath = 1,       // stand-alone sample paths (CLI fbm)
  kFieldMode = 2,  // temporal path of one spherical-harmonic mode
  kCrmdError = 3,  // common random numbers of the CRMD error experiment
  kBench = 4,
  kTest = 5,
};

/// 64-bit stream identifier for (purpose, indices...). Stable across releases.
std::uint64_t stream_id(StreamPurpose purpose, std::initializer_list<std::uint64_t> indices);

/// Standard normal variates from Philox blocks via Box-Muller.
/// Each block yields two 53-bit uniforms and therefore exactly two normals.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream);

  double operator()();

  /// Number of normals handed out so far.
  std::uint64_t drawn() const { return drawn_; }

 private:
  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
  std::uint64_t drawn_ = 0;
};

/// Replays a fixed list of variates; used to feed the same numbers to several samplers.
class ReplaySource {
 public:
  explicit ReplaySource(std::span<const double> values) : values_(values) {}
  double operator()();
  std::size_t consumed() const { return next_; }

 private:
  std::span<const double> values_;
  std::size_t next_ = 0;
};

/// Wraps another source and counts how many variates were pulled through it.
template <GaussianSource Inner>
class CountingSource {
 public:
  explicit CountingSource(Inner& inner) : inner_(inner) {}
  double operator()() {
    ++count_;
    return inner_();
  }
  std::uint64_t count() const { return count_; }

 private:
  Inner& inner_;
  std::uint64_t count_ = 0;
};

/// Draws n normals from a source into a vector.
template <GaussianSource G>
std::vector<double> draw_normals(G& source, std::size_t n) {
  std::vector<double> out(n);
  for (auto& x : out) x = source();
  return out;
}

}  // namespace qfbm
