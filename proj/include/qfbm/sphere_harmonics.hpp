#pragma once

// Real spherical harmonics on the unit sphere S^2.
//
// Y_{l,0}  =        Pbar_l^0(cos theta)
// Y_{l,m}  = sqrt2  Pbar_l^m(cos theta) cos(m phi),   m > 0
// Y_{l,-m} = sqrt2  Pbar_l^m(cos theta) sin(m phi),   m > 0
//
// with Pbar_l^m = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m computed directly by normalized
// recurrences (no Condon-Shortley phase), so values stay bounded by sqrt((2l+1)/(4 pi)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace qfbm {

/// Point on S^2: colatitude theta in [0, pi], longitude phi in [0, 2 pi).
struct Direction {
  double theta = 0.0;
  double phi = 0.0;

  Eigen::Vector3d unit_vector() const {
    const double s = std::sin(theta);
    return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
  }
};

/// Great-circle distance arccos<x, y>, evaluated as atan2(|x cross y|, <x, y>) so that
/// nearby and antipodal points keep full precision.
inline double geodesic_distance(const Direction& x, const Direction& y) {
  const Eigen::Vector3d u = x.unit_vector();
  const Eigen::Vector3d v = y.unit_vector();
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

/// Legendre polynomial P_l(x) by the three-term recurrence.
template <typename Scalar = double>
Scalar legendre_p(int degree, Scalar x) {
  using std::abs;
  if (degree < 0) throw std::domain_error("Legendre degree must be nonnegative");
  if (abs(x) > 1) throw std::domain_error("Legendre argument must lie in [-1, 1]");
  Scalar prev = 1;
  if (degree == 0) return prev;
  Scalar cur = x;
  for (int l = 2; l <= degree; ++l) {
    const Scalar next = ((2 * l - 1) * x * cur - (l - 1) * prev) / l;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Fully normalized associated Legendre values Pbar_l^m(cos theta) for 0 <= m <= l <= L,
/// stored row-wise in a packed triangle.
template <typename Scalar = double>
class NormalizedLegendre {
 public:
  explicit NormalizedLegendre(int max_degree) : max_degree_(max_degree) {
    if (max_degree < 0) throw std::domain_error("max degree must be nonnegative");
    values_.assign(index(max_degree, max_degree) + 1, Scalar(0));
    alpha_.resize(values_.size());
    beta_.resize(values_.size());
    using std::sqrt;
    for (int m = 0; m <= max_degree; ++m) {
      for (int l = m + 2; l <= max_degree; ++l) {
        const auto i = index(l, m);
        const Scalar ll = l, mm = m;
        alpha_[i] = sqrt((4 * ll * ll - 1) / (ll * ll - mm * mm));
        beta_[i] = sqrt(((ll - 1) * (ll - 1) - mm * mm) / (4 * (ll - 1) * (ll - 1) - 1));
      }
    }
  }

  int max_degree() const { return max_degree_; }

  /// Recomputes the table for colatitude theta.
  void evaluate(Scalar theta) {
    using std::cos;
    using std::sin;
    using std::sqrt;
    const Scalar x = cos(theta);
    const Scalar s = sin(theta);
    const Scalar inv_sqrt_4pi = 1 / sqrt(4 * std::numbers::pi_v<Scalar>);
    Scalar diag = inv_sqrt_4pi;
    for (int m = 0; m <= max_degree_; ++m) {
      if (m > 0) diag *= sqrt(Scalar(2 * m + 1) / Scalar(2 * m)) * s;
      values_[index(m, m)] = diag;
      if (m + 1 <= max_degree_) values_[index(m + 1, m)] = sqrt(Scalar(2 * m + 3)) * x * diag;
      for (int l = m + 2; l <= max_degree_; ++l) {
        const auto i = index(l, m);
        values_[i] = alpha_[i] * (x * values_[index(l - 1, m)] - beta_[i] * values_[index(l - 2, m)]);
      }
    }
  }

  Scalar operator()(int l, int m) const { return values_[index(l, m)]; }

  static std::size_t index(int l, int m) {
    return static_cast<std::size_t>(l) * static_cast<std::size_t>(l + 1) / 2 + static_cast<std::size_t>(m);
  }

 private:
  int max_degree_;
  std::vector<Scalar> values_;
  std::vector<Scalar> alpha_;
  std::vector<Scalar> beta_;
};

/// Real orthonormal spherical harmonic Y_{l,m}(dir).
inline double real_sph_harm(int l, int m, const Direction& dir) {
  if (l < 0 || std::abs(m) > l) throw std::domain_error("spherical harmonic needs |m| <= l");
  NormalizedLegendre<double> table(l);
  table.evaluate(dir.theta);
  const int am = std::abs(m);
  const double p = table(l, am);
  if (m == 0) return p;
  const double trig = m > 0 ? std::cos(am * dir.phi) : std::sin(am * dir.phi);
  return std::numbers::sqrt2 * p * trig;
}

/// All (2l+1) values Y_{l,m}(dir), m = -l..l, in ascending m.
inline Eigen::VectorXd real_sph_harm_degree(int l, const Direction& dir) {
  if (l < 0) throw std::domain_error("degree must be nonnegative");
  NormalizedLegendre<double> table(l);
  table.evaluate(dir.theta);
  Eigen::VectorXd out(2 * l + 1);
  out[l] = table(l, 0);
  for (int m = 1; m <= l; ++m) {
    const double p = std::numbers::sqrt2 * table(l, m);
    out[l + m] = p * std::cos(m * dir.phi);
    out[l - m] = p * std::sin(m * dir.phi);
  }
  return out;
}

/// |sum_m Y_{l,m}(x) Y_{l,m}(y) - (2l+1)/(4 pi) P_l(cos d(x, y))|.
inline double addition_theorem_residual(int l, const Direction& x, const Direction& y) {
  const Eigen::VectorXd yx = real_sph_harm_degree(l, x);
  const Eigen::VectorXd yy = real_sph_harm_degree(l, y);
  const double cos_d = std::clamp(x.unit_vector().dot(y.unit_vector()), -1.0, 1.0);
  // 1/(4 pi) as the square of the constant harmonic, so degree 0 cancels exactly.
  const double c = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  const double rhs = (2.0 * l + 1.0) * (c * c) * legendre_p(l, cos_d);
  return std::abs(yx.dot(yy) - rhs);
}

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  Eigen::VectorXd nodes;    ///< ascending
  Eigen::VectorXd weights;
};

GaussLegendreRule gauss_legendre(int n);

/// Product grid of colatitude rings and equispaced longitudes.
class SphereGrid {
 public:
  enum class Kind { kEquiangular, kGaussLegendre };

  /// theta_i = pi (i + 1/2) / n_theta, phi_j = 2 pi j / n_phi.
  static SphereGrid equiangular(int n_theta, int n_phi);
  /// Colatitudes at Gauss-Legendre nodes in cos(theta), with quadrature weights.
  static SphereGrid gauss_legendre(int n_theta, int n_phi);

  Kind kind() const { return kind_; }
  int n_theta() const { return static_cast<int>(theta_.size()); }
  int n_phi() const { return n_phi_; }
  double theta(int i) const { return theta_[i]; }
  double phi(int j) const { return 2.0 * std::numbers::pi * j / n_phi_; }
  Direction node(int i, int j) const { return {theta(i), phi(j)}; }
  /// Area weight of node (i, j); exact quadrature on the Gauss-Legendre grid.
  double weight(int i) const { return weight_[i]; }
  /// True when longitudes resolve every order m <= degree.
  bool resolves(int degree) const { return n_phi_ >= 2 * degree + 1; }

 private:
  SphereGrid(Kind kind, Eigen::VectorXd theta, Eigen::VectorXd weight, int n_phi)
      : kind_(kind), theta_(std::move(theta)), weight_(std::move(weight)), n_phi_(n_phi) {}

  Kind kind_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd weight_;
  int n_phi_;
};

}  // namespace qfbm
