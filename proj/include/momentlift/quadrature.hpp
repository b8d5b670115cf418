#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "momentlift/errors.hpp"
#include "momentlift/geometry.hpp"
#include "momentlift/moments.hpp"
#include "momentlift/objects.hpp"
#include "momentlift/parallel.hpp"

namespace momentlift {

inline constexpr int kDefaultSo2Nodes = 2048;
inline constexpr int kDefaultSo3Nodes = 48;

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// (P_n(x), P_{n-1}(x)) by the three-term recurrence.
inline std::pair<double, double> legendre_pair(int n, double x) {
  double prev = 1.0;
  double cur = x;
  for (int k = 2; k <= n; ++k) {
    const double next = ((2.0 * k - 1.0) * x * cur - (k - 1.0) * prev) / k;
    prev = cur;
    cur = next;
  }
  return {cur, prev};
}

}  // namespace detail

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
inline QuadratureRule gauss_legendre(int count) {
  if (count < 1) throw ValidationError("Gauss-Legendre rule needs at least one node");
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(count));
  rule.weights.resize(static_cast<std::size_t>(count));
  for (int i = 0; i < (count + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double derivative = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, p_prev] = detail::legendre_pair(count, x);
      derivative = count * (x * p - p_prev) / (x * x - 1.0);
      const double step = p / derivative;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const auto [p, p_prev] = detail::legendre_pair(count, x);
    derivative = count * (x * p - p_prev) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(count - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  return rule;
}

inline Matrix so2_rotation(double theta) {
  Matrix r(2, 2);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  r << c, -s, s, c;
  return r;
}

/// R = Rz(alpha) Ry(beta) Rz(gamma).
inline Matrix euler_zyz(double alpha, double beta, double gamma) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  Matrix r(3, 3);
  r << ca * cb * cg - sa * sg, -ca * cb * sg - sa * cg, ca * sb,  //
      sa * cb * cg + ca * sg, -sa * cb * sg + ca * cg, sa * sb,   //
      -sb * cg, sb * sg, cb;
  return r;
}

namespace detail {

struct So3Axes {
  std::vector<double> angles;        // alpha = gamma grid
  double angle_weight = 0.0;         // 2 pi / nodes
  std::vector<double> betas;
  std::vector<double> beta_weights;  // includes sin(beta) and the 1/(8 pi^2) normalization
};

inline So3Axes so3_axes(int nodes) {
  So3Axes axes;
  axes.angle_weight = 2.0 * std::numbers::pi / nodes;
  for (int k = 0; k < nodes; ++k) axes.angles.push_back(axes.angle_weight * k);
  const auto gl = gauss_legendre(nodes);
  const double half_range = 0.5 * std::numbers::pi;
  for (int k = 0; k < nodes; ++k) {
    const double beta = half_range * (gl.nodes[static_cast<std::size_t>(k)] + 1.0);
    axes.betas.push_back(beta);
    axes.beta_weights.push_back(half_range * gl.weights[static_cast<std::size_t>(k)] * std::sin(beta) /
                                (8.0 * std::numbers::pi * std::numbers::pi));
  }
  return axes;
}

inline Complex product_at(const GaussianMixture& obj, const MomentQuery& query, const Matrix& r, Vector& scratch) {
  Complex p(1.0, 0.0);
  for (std::size_t j = 0; j < static_cast<std::size_t>(query.order()); ++j) {
    scratch.noalias() = r.transpose() * query[j];
    p *= fourier_eval_with_norm(obj, scratch, query[j].squaredNorm());
  }
  return p;
}

}  // namespace detail

/// Deterministic Haar expectation of prod_j \hat f(R^T omega_j). SO(2):
/// trapezoid in theta with `nodes` points. SO(3): Euler ZYZ product rule with
/// trapezoid in alpha and gamma, Gauss-Legendre in beta, `nodes` per axis.
inline Complex quadrature_full_moment(const GaussianMixture& obj, const MomentQuery& query, int nodes) {
  const int n = obj.dim();
  if (n != 2 && n != 3) {
    throw UnsupportedGroupError("quadrature is available for SO(2) and SO(3) only (n=" + std::to_string(n) + ")");
  }
  if (nodes < 8) throw ValidationError("quadrature needs at least 8 nodes");
  if (query.dim() != n) throw DimensionError("query dimension does not match object");

  Vector scratch(n);
  CompensatedComplexSum sum;
  if (n == 2) {
    for (int k = 0; k < nodes; ++k) {
      const Matrix r = so2_rotation(2.0 * std::numbers::pi * k / nodes);
      sum.add(detail::product_at(obj, query, r, scratch));
    }
    return sum.value() / static_cast<double>(nodes);
  }

  const auto axes = detail::so3_axes(nodes);
  const double angle_weight_sq = axes.angle_weight * axes.angle_weight;
  for (int a = 0; a < nodes; ++a) {
    for (int b = 0; b < nodes; ++b) {
      const double w = angle_weight_sq * axes.beta_weights[static_cast<std::size_t>(b)];
      for (int g = 0; g < nodes; ++g) {
        const Matrix r = euler_zyz(axes.angles[static_cast<std::size_t>(a)], axes.betas[static_cast<std::size_t>(b)],
                                   axes.angles[static_cast<std::size_t>(g)]);
        sum.add(w * detail::product_at(obj, query, r, scratch));
      }
    }
  }
  return sum.value();
}

/// The quadrature nodes as a rotation ensemble, so the Monte Carlo estimators
/// can be run on them. SO(2) nodes are equally weighted (no weights stored);
/// SO(3) nodes carry their product-rule weights.
inline RotationEnsemble quadrature_ensemble(int n, int nodes) {
  if (n != 2 && n != 3) {
    throw UnsupportedGroupError("quadrature is available for SO(2) and SO(3) only (n=" + std::to_string(n) + ")");
  }
  if (nodes < 8) throw ValidationError("quadrature needs at least 8 nodes");
  std::vector<double> data;
  if (n == 2) {
    for (int k = 0; k < nodes; ++k) {
      const Matrix r = so2_rotation(2.0 * std::numbers::pi * k / nodes);
      data.insert(data.end(), r.data(), r.data() + 4);
    }
    return RotationEnsemble(2, 0, std::move(data));
  }
  const auto axes = detail::so3_axes(nodes);
  std::vector<double> weights;
  for (int a = 0; a < nodes; ++a) {
    for (int b = 0; b < nodes; ++b) {
      for (int g = 0; g < nodes; ++g) {
        const Matrix r = euler_zyz(axes.angles[static_cast<std::size_t>(a)], axes.betas[static_cast<std::size_t>(b)],
                                   axes.angles[static_cast<std::size_t>(g)]);
        data.insert(data.end(), r.data(), r.data() + 9);
        weights.push_back(axes.angle_weight * axes.angle_weight * axes.beta_weights[static_cast<std::size_t>(b)]);
      }
    }
  }
  return RotationEnsemble(3, 0, std::move(data), std::move(weights));
}

}  // namespace momentlift
