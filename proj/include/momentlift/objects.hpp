#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "momentlift/errors.hpp"
#include "momentlift/geometry.hpp"
#include "momentlift/rng.hpp"

namespace momentlift {

using Complex = std::complex<double>;

struct GaussianComponent {
  double amplitude = 1.0;
  Vector mean;
  double sigma = 1.0;
};

/// f(x) = sum_k a_k exp(-|x - mu_k|^2 / (2 sigma_k^2)) on R^n.
///
/// Isotropic components keep the family closed under rotation (means rotate)
/// and under marginalization of trailing coordinates (the amplitude absorbs
/// the Gaussian integral), so both sides of the slice identity have closed
/// forms. Values are immutable after construction.
class GaussianMixture {
 public:
  GaussianMixture(int n, const std::vector<GaussianComponent>& components) : n_(n) {
    if (n < 1) throw DimensionError("object dimension must be positive");
    if (components.empty()) throw ValidationError("a Gaussian mixture needs at least one component");
    const auto count = static_cast<Eigen::Index>(components.size());
    amplitudes_.resize(count);
    sigmas_.resize(count);
    means_.resize(n, count);
    for (Eigen::Index k = 0; k < count; ++k) {
      const auto& c = components[static_cast<std::size_t>(k)];
      if (c.mean.size() != n) {
        throw DimensionError("component " + std::to_string(k) + " mean has dimension " +
                             std::to_string(c.mean.size()) + ", expected " + std::to_string(n));
      }
      if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) {
        throw ValidationError("component " + std::to_string(k) + " width must be positive and finite");
      }
      if (!std::isfinite(c.amplitude) || !c.mean.allFinite()) {
        throw ValidationError("component " + std::to_string(k) + " has non-finite parameters");
      }
      amplitudes_(k) = c.amplitude;
      sigmas_(k) = c.sigma;
      means_.col(k) = c.mean;
    }
    refresh_masses();
  }

  int dim() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(amplitudes_.size()); }

  double amplitude(std::size_t k) const { return amplitudes_(static_cast<Eigen::Index>(k)); }
  double sigma(std::size_t k) const { return sigmas_(static_cast<Eigen::Index>(k)); }
  Vector mean(std::size_t k) const { return means_.col(static_cast<Eigen::Index>(k)); }
  /// n x K, one mean per column.
  const Matrix& means() const { return means_; }

  GaussianComponent component(std::size_t k) const { return {amplitude(k), mean(k), sigma(k)}; }
  std::vector<GaussianComponent> components() const {
    std::vector<GaussianComponent> out;
    for (std::size_t k = 0; k < size(); ++k) out.push_back(component(k));
    return out;
  }

  /// Integral of component k over R^n: a_k (2 pi sigma_k^2)^{n/2}.
  double mass(std::size_t k) const { return masses_(static_cast<Eigen::Index>(k)); }

 private:
  GaussianMixture() = default;

  void refresh_masses() {
    masses_.resize(amplitudes_.size());
    for (Eigen::Index k = 0; k < amplitudes_.size(); ++k) {
      masses_(k) = amplitudes_(k) *
                   std::pow(2.0 * std::numbers::pi * sigmas_(k) * sigmas_(k), 0.5 * static_cast<double>(n_));
    }
  }

  friend void rotate_object_into(const GaussianMixture&, const Eigen::Ref<const Matrix>&, GaussianMixture&);
  friend void project_object_into(const GaussianMixture&, int, GaussianMixture&);
  friend class MixtureWorkspace;

  int n_ = 0;
  Vector amplitudes_;
  Vector sigmas_;
  Matrix means_;
  Vector masses_;
};

namespace detail {

// Closed form with |omega|^2 supplied by the caller; rotated frequencies pass
// the unrotated norm so rotation-invariant terms are bitwise constant.
inline Complex fourier_eval_with_norm(const GaussianMixture& obj, const Eigen::Ref<const Vector>& omega,
                                      double omega_sq) {
  const Matrix& means = obj.means();
  double re = 0.0;
  double im = 0.0;
  for (std::size_t k = 0; k < obj.size(); ++k) {
    const double s = obj.sigma(k);
    const double envelope = obj.mass(k) * std::exp(-0.5 * s * s * omega_sq);
    const double phase = omega.dot(means.col(static_cast<Eigen::Index>(k)));
    re += envelope * std::cos(phase);
    im -= envelope * std::sin(phase);
  }
  return {re, im};
}

}  // namespace detail

/// \hat f(omega) = sum_k a_k (2 pi sigma_k^2)^{n/2} exp(-sigma_k^2 |omega|^2 / 2) exp(-i <omega, mu_k>)
inline Complex fourier_eval(const GaussianMixture& obj, const Eigen::Ref<const Vector>& omega) {
  if (omega.size() != obj.dim()) {
    throw DimensionError("frequency has dimension " + std::to_string(omega.size()) + ", object has " +
                         std::to_string(obj.dim()));
  }
  return detail::fourier_eval_with_norm(obj, omega, omega.squaredNorm());
}

/// Writes (R . f) into `out`; reuses out's storage.
inline void rotate_object_into(const GaussianMixture& obj, const Eigen::Ref<const Matrix>& r,
                               GaussianMixture& out) {
  if (r.rows() != obj.dim() || r.cols() != obj.dim()) {
    throw DimensionError("rotation dimension does not match object dimension");
  }
  out.n_ = obj.n_;
  out.amplitudes_ = obj.amplitudes_;
  out.sigmas_ = obj.sigmas_;
  out.means_.resize(obj.means_.rows(), obj.means_.cols());
  out.means_.noalias() = r * obj.means_;
  out.masses_ = obj.masses_;
}

/// Writes P(f) on R^m into `out`: integrates out the trailing n - m coordinates.
inline void project_object_into(const GaussianMixture& obj, int m, GaussianMixture& out) {
  if (m < 1 || m >= obj.dim()) {
    throw ModelError("projection requires 1 <= m < n (m=" + std::to_string(m) + ", n=" +
                     std::to_string(obj.dim()) + ")");
  }
  const double dropped = static_cast<double>(obj.n_ - m);
  out.n_ = m;
  out.sigmas_ = obj.sigmas_;
  out.amplitudes_.resize(obj.amplitudes_.size());
  for (Eigen::Index k = 0; k < obj.amplitudes_.size(); ++k) {
    const double s = obj.sigmas_(k);
    out.amplitudes_(k) = obj.amplitudes_(k) * std::pow(2.0 * std::numbers::pi * s * s, 0.5 * dropped);
  }
  out.means_ = obj.means_.topRows(m);
  out.refresh_masses();
}

/// (R . f)(x) = f(R^{-1} x); isotropic components only move their means.
inline GaussianMixture rotate_object(const GaussianMixture& obj, const RotationMatrix& r) {
  GaussianMixture out = obj;
  rotate_object_into(obj, r.matrix(), out);
  return out;
}

inline GaussianMixture project_object(const GaussianMixture& obj, int m) {
  GaussianMixture out = obj;
  project_object_into(obj, m, out);
  return out;
}

/// Scratch buffers for evaluating \hat{P(R . f)} many times without
/// reallocating; one instance per worker.
class MixtureWorkspace {
 public:
  explicit MixtureWorkspace(const GaussianMixture& obj) : rotated_(obj), projected_(obj) {}

  /// Rotates then projects; the result stays valid until the next call.
  const GaussianMixture& rotate_and_project(const GaussianMixture& obj, const Eigen::Ref<const Matrix>& r,
                                            int m) {
    rotate_object_into(obj, r, rotated_);
    project_object_into(rotated_, m, projected_);
    return projected_;
  }

 private:
  GaussianMixture rotated_;
  GaussianMixture projected_;
};

/// Fourier transform of the projected, rotated object at eta. Computed by
/// building P(R . f) explicitly, never through R^{-1} iota(eta).
inline Complex projected_fourier_eval(const GaussianMixture& obj, const RotationMatrix& r, const Vector& eta) {
  if (r.dim() != obj.dim()) throw DimensionError("rotation dimension does not match object dimension");
  const auto m = static_cast<int>(eta.size());
  return fourier_eval(project_object(rotate_object(obj, r), m), eta);
}

/// Random mixture: amplitudes in [0.5, 2], means in [-2, 2]^n, widths in [0.5, 1.5].
inline GaussianMixture random_mixture(int n, std::size_t components, RngStream& stream) {
  if (components == 0) throw ValidationError("component count must be positive");
  std::vector<GaussianComponent> parts;
  parts.reserve(components);
  for (std::size_t k = 0; k < components; ++k) {
    GaussianComponent c;
    c.amplitude = stream.uniform(0.5, 2.0);
    c.mean = Vector(n);
    for (int i = 0; i < n; ++i) c.mean(i) = stream.uniform(-2.0, 2.0);
    c.sigma = stream.uniform(0.5, 1.5);
    parts.push_back(std::move(c));
  }
  return GaussianMixture(n, parts);
}

/// Single centered unit Gaussian (a = 1, mu = 0, sigma = 1).
inline GaussianMixture centered_gaussian(int n) {
  return GaussianMixture(n, {GaussianComponent{1.0, Vector::Zero(n), 1.0}});
}

}  // namespace momentlift
