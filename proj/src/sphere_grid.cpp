#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "qfbm/sphere_harmonics.hpp"

namespace qfbm {

namespace {

// P_n(x) and P_n'(x) for n >= 1.
std::pair<double, double> legendre_and_derivative(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int l = 2; l <= n; ++l) {
    const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw std::domain_error("Gauss-Legendre rule needs n >= 1");
  GaussLegendreRule rule{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Tricomi initial guess for the (i+1)-th largest root, then Newton.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre_and_derivative(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre_and_derivative(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[n - 1 - i] = w;
    rule.weights[i] = w;
  }
  return rule;
}

SphereGrid SphereGrid::equiangular(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw std::domain_error("sphere grid needs positive sizes");
  Eigen::VectorXd theta(n_theta), weight(n_theta);
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    theta[i] = std::numbers::pi * (i + 0.5) / n_theta;
    weight[i] = std::sin(theta[i]) * (std::numbers::pi / n_theta) * dphi;
  }
  return SphereGrid(Kind::kEquiangular, std::move(theta), std::move(weight), n_phi);
}

SphereGrid SphereGrid::gauss_legendre(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw std::domain_error("sphere grid needs positive sizes");
  const auto rule = qfbm::gauss_legendre(n_theta);
  Eigen::VectorXd theta(n_theta), weight(n_theta);
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  // Rings ordered north to south: descending cos(theta).
  for (int i = 0; i < n_theta; ++i) {
    theta[i] = std::acos(rule.nodes[n_theta - 1 - i]);
    weight[i] = rule.weights[n_theta - 1 - i] * dphi;
  }
  return SphereGrid(Kind::kGaussLegendre, std::move(theta), std::move(weight), n_phi);
}

}  // namespace qfbm
