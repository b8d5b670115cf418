#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "momentlift/errors.hpp"
#include "momentlift/geometry.hpp"
#include "momentlift/objects.hpp"
#include "momentlift/parallel.hpp"
#include "momentlift/rng.hpp"

namespace momentlift {

/// A d-tuple of frequency vectors sharing one dimension.
class MomentQuery {
 public:
  explicit MomentQuery(std::vector<Vector> freqs) : freqs_(std::move(freqs)) {
    if (freqs_.empty()) throw ValidationError("a moment query needs d >= 1 frequencies");
    const auto dim = freqs_.front().size();
    if (dim < 1) throw DimensionError("frequency vectors must be non-empty");
    for (const auto& f : freqs_) {
      if (f.size() != dim) throw DimensionError("all frequencies of a query must share one dimension");
      if (!f.allFinite()) throw ValidationError("frequency vector has non-finite entries");
    }
  }

  int order() const { return static_cast<int>(freqs_.size()); }
  int dim() const { return static_cast<int>(freqs_.front().size()); }
  const std::vector<Vector>& freqs() const { return freqs_; }
  const Vector& operator[](std::size_t j) const { return freqs_[j]; }

  /// (iota(eta_1), ..., iota(eta_d)) in R^n.
  MomentQuery embedded(int n) const {
    std::vector<Vector> out;
    out.reserve(freqs_.size());
    for (const auto& f : freqs_) out.push_back(canonical_embed(f, n));
    return MomentQuery(std::move(out));
  }

  MomentQuery negated() const {
    std::vector<Vector> out;
    for (const auto& f : freqs_) out.push_back(-f);
    return MomentQuery(std::move(out));
  }

  /// (U omega_1, ..., U omega_d).
  MomentQuery transformed(const Matrix& u) const {
    std::vector<Vector> out;
    for (const auto& f : freqs_) out.push_back(u * f);
    return MomentQuery(std::move(out));
  }

 private:
  std::vector<Vector> freqs_;
};

struct MomentEstimate {
  Complex value;
  /// Standard error of the mean, max over real and imaginary parts.
  double std_error = 0.0;
  std::size_t n_samples = 0;
};

/// |a - b| / max(1, |b|).
inline double relative_residual(Complex a, Complex b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline double max_relative_residual(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw DimensionError("sample vectors differ in length");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, relative_residual(a[i], b[i]));
  return worst;
}

/// Seeded list of rotations, stored contiguously (column-major n x n blocks),
/// with optional importance weights. Immutable after construction.
class RotationEnsemble {
 public:
  RotationEnsemble(int n, std::uint64_t seed, std::vector<double> data,
                   std::optional<std::vector<double>> weights = std::nullopt)
      : n_(n), seed_(seed), data_(std::move(data)), weights_(std::move(weights)) {
    if (n < 1) throw DimensionError("ensemble dimension must be positive");
    const auto block = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    if (data_.size() % block != 0) throw DimensionError("ensemble data is not a whole number of n x n blocks");
    for (std::size_t i = 0; i < size(); ++i) (void)RotationMatrix(Matrix(rotation(i)));
    if (weights_) {
      if (weights_->size() != size()) throw DimensionError("weight count does not match rotation count");
      for (double w : *weights_) {
        // Zero or subnormal weights mean the viewing density (nearly) vanishes;
        // reweighting cannot recover Haar expectations there.
        if (!std::isfinite(w) || !(w >= std::numeric_limits<double>::min())) {
          throw ValidationError("importance weights must be strictly positive and finite");
        }
      }
    }
  }

  static RotationEnsemble from_rotations(int n, std::uint64_t seed, const std::vector<RotationMatrix>& rotations,
                                         std::optional<std::vector<double>> weights = std::nullopt) {
    std::vector<double> data;
    data.reserve(rotations.size() * static_cast<std::size_t>(n * n));
    for (const auto& r : rotations) {
      if (r.dim() != n) throw DimensionError("rotation dimension does not match ensemble dimension");
      data.insert(data.end(), r.matrix().data(), r.matrix().data() + n * n);
    }
    return RotationEnsemble(n, seed, std::move(data), std::move(weights));
  }

  int dim() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return data_.size() / (static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_)); }
  bool empty() const { return data_.empty(); }

  Eigen::Map<const Matrix> rotation(std::size_t i) const {
    return Eigen::Map<const Matrix>(data_.data() + i * static_cast<std::size_t>(n_ * n_), n_, n_);
  }

  bool has_weights() const { return weights_.has_value(); }
  const std::optional<std::vector<double>>& weights() const { return weights_; }

  RotationEnsemble without_weights() const { return RotationEnsemble(n_, seed_, data_); }

  /// {Q R_i}, keeping weights.
  RotationEnsemble left_multiplied(const Matrix& q) const {
    if (q.rows() != n_ || q.cols() != n_) throw DimensionError("left factor dimension mismatch");
    std::vector<double> data(data_.size());
    for (std::size_t i = 0; i < size(); ++i) {
      Eigen::Map<Matrix> dst(data.data() + i * static_cast<std::size_t>(n_ * n_), n_, n_);
      dst.noalias() = q * rotation(i);
    }
    return RotationEnsemble(n_, seed_, std::move(data), weights_);
  }

 private:
  int n_;
  std::uint64_t seed_;
  std::vector<double> data_;
  std::optional<std::vector<double>> weights_;
};

/// `count` Haar rotations drawn sequentially from RngStream(seed, stream_index).
inline RotationEnsemble haar_ensemble(int n, std::size_t count, std::uint64_t seed, std::uint64_t stream_index = 0) {
  RngStream stream(seed, stream_index);
  std::vector<double> data;
  data.reserve(count * static_cast<std::size_t>(n * n));
  for (std::size_t i = 0; i < count; ++i) {
    const auto r = haar_rotation(n, stream);
    data.insert(data.end(), r.matrix().data(), r.matrix().data() + n * n);
  }
  return RotationEnsemble(n, seed, std::move(data));
}

/// Rejection sampler for the density proportional to exp(kappa tr R) with
/// respect to Haar; a Haar proposal is accepted with probability
/// exp(kappa (tr R - n)). Stored weights are exp(-kappa tr R). With kappa = 0
/// no acceptance draws are consumed, so the rotations coincide with
/// haar_ensemble on the same stream.
inline RotationEnsemble sample_tilted_ensemble(int n, double kappa, std::size_t count, RngStream& stream) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ValidationError("kappa must be finite and >= 0");
  if (count < 1) throw ValidationError("tilted ensemble needs count >= 1");
  std::vector<double> data;
  std::vector<double> weights;
  data.reserve(count * static_cast<std::size_t>(n * n));
  weights.reserve(count);
  while (weights.size() < count) {
    auto r = haar_rotation(n, stream);
    const double trace = r.matrix().trace();
    if (kappa > 0.0 && stream.uniform() >= std::exp(kappa * (trace - n))) continue;
    data.insert(data.end(), r.matrix().data(), r.matrix().data() + n * n);
    weights.push_back(std::exp(-kappa * trace));
  }
  return RotationEnsemble(n, stream.seed(), std::move(data), std::move(weights));
}

namespace detail {

// Product of the per-frequency factors in a canonical (sorted) order, so the
// result does not depend on the order of the query tuple.
inline Complex canonical_product(std::span<Complex> factors) {
  std::sort(factors.begin(), factors.end(), [](Complex a, Complex b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
  });
  Complex p = factors.front();
  for (std::size_t j = 1; j < factors.size(); ++j) p *= factors[j];
  return p;
}

inline void require_nonempty(const RotationEnsemble& ens) {
  if (ens.empty()) throw ValidationError("rotation ensemble is empty");
}

inline bool uniform_weights(const std::vector<double>& w) {
  return std::all_of(w.begin(), w.end(), [&](double x) { return x == w.front(); });
}

}  // namespace detail

/// Per-sample products prod_j \hat f(R_i^T omega_j).
inline std::vector<Complex> full_moment_samples(const GaussianMixture& obj, const MomentQuery& query,
                                                const RotationEnsemble& ens, unsigned workers = default_workers()) {
  detail::require_nonempty(ens);
  if (query.dim() != obj.dim() || ens.dim() != obj.dim()) {
    throw DimensionError("full moment needs query, object and ensemble of one dimension");
  }
  std::vector<double> norms;
  for (const auto& w : query.freqs()) norms.push_back(w.squaredNorm());
  std::vector<Complex> samples(ens.size());
  parallel_for(ens.size(), workers, [&](std::size_t begin, std::size_t end) {
    Vector rotated(obj.dim());
    std::vector<Complex> factors(static_cast<std::size_t>(query.order()));
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = ens.rotation(i);
      for (std::size_t j = 0; j < factors.size(); ++j) {
        rotated.noalias() = r.transpose() * query[j];
        factors[j] = detail::fourier_eval_with_norm(obj, rotated, norms[j]);
      }
      samples[i] = detail::canonical_product(factors);
    }
  });
  return samples;
}

/// Per-sample products prod_j \hat{P(R_i . f)}(eta_j), evaluated from the
/// explicitly rotated and projected object.
inline std::vector<Complex> proj_moment_samples(const GaussianMixture& obj, const MomentQuery& query, int m,
                                                const RotationEnsemble& ens, unsigned workers = default_workers()) {
  if (m < 1 || m >= obj.dim()) {
    throw ModelError("projected moment requires 1 <= m < n (m=" + std::to_string(m) + ", n=" +
                     std::to_string(obj.dim()) + ")");
  }
  detail::require_nonempty(ens);
  if (query.dim() != m) throw DimensionError("projected query dimension must equal m");
  if (ens.dim() != obj.dim()) throw DimensionError("ensemble dimension does not match object");
  std::vector<Complex> samples(ens.size());
  parallel_for(ens.size(), workers, [&](std::size_t begin, std::size_t end) {
    MixtureWorkspace workspace(obj);
    std::vector<Complex> factors(static_cast<std::size_t>(query.order()));
    for (std::size_t i = begin; i < end; ++i) {
      const GaussianMixture& projected = workspace.rotate_and_project(obj, ens.rotation(i), m);
      for (std::size_t j = 0; j < factors.size(); ++j) factors[j] = fourier_eval(projected, query[j]);
      samples[i] = detail::canonical_product(factors);
    }
  });
  return samples;
}

/// Reduces per-sample products in index order with compensated summation.
/// Weighted ensembles use the self-normalized estimate sum w p / sum w with
/// the delta-method standard error; uniform weights fall back to the plain
/// mean so the two agree bit for bit. Identical samples give std_error 0.
inline MomentEstimate summarize_samples(std::span<const Complex> samples,
                                        const std::optional<std::vector<double>>& weights = std::nullopt) {
  if (samples.empty()) throw ValidationError("cannot summarize an empty sample set");
  const std::size_t count = samples.size();
  if (weights && weights->size() != count) throw DimensionError("weight count does not match sample count");

  MomentEstimate est;
  est.n_samples = count;
  if (std::all_of(samples.begin(), samples.end(), [&](Complex z) { return z == samples.front(); })) {
    est.value = samples.front();
    return est;
  }

  if (!weights || detail::uniform_weights(*weights)) {
    CompensatedComplexSum sum;
    for (const auto& z : samples) sum.add(z);
    const Complex mean = sum.value() / static_cast<double>(count);
    est.value = mean;
    if (count > 1) {
      CompensatedSum var_re;
      CompensatedSum var_im;
      for (const auto& z : samples) {
        const Complex dz = z - mean;
        var_re.add(dz.real() * dz.real());
        var_im.add(dz.imag() * dz.imag());
      }
      const double denom = static_cast<double>(count - 1) * static_cast<double>(count);
      est.std_error = std::sqrt(std::max(var_re.value(), var_im.value()) / denom);
    }
    return est;
  }

  const auto& w = *weights;
  CompensatedSum total;
  CompensatedComplexSum weighted;
  for (std::size_t i = 0; i < count; ++i) {
    total.add(w[i]);
    weighted.add(w[i] * samples[i]);
  }
  const double w_sum = total.value();
  const Complex mean = weighted.value() / w_sum;
  CompensatedSum var_re;
  CompensatedSum var_im;
  for (std::size_t i = 0; i < count; ++i) {
    const Complex dz = samples[i] - mean;
    const double w2 = w[i] * w[i];
    var_re.add(w2 * dz.real() * dz.real());
    var_im.add(w2 * dz.imag() * dz.imag());
  }
  est.value = mean;
  est.std_error = std::sqrt(std::max(var_re.value(), var_im.value())) / w_sum;
  return est;
}

/// Full moment: (weighted) mean of prod_j \hat f(R_i^T omega_j).
inline MomentEstimate estimate_full_moment(const GaussianMixture& obj, const MomentQuery& query,
                                           const RotationEnsemble& ens, unsigned workers = default_workers()) {
  const auto samples = full_moment_samples(obj, query, ens, workers);
  return summarize_samples(samples, ens.weights());
}

/// Projected moment: (weighted) mean of prod_j \hat{P(R_i . f)}(eta_j).
inline MomentEstimate estimate_proj_moment(const GaussianMixture& obj, const MomentQuery& query, int m,
                                           const RotationEnsemble& ens, unsigned workers = default_workers()) {
  const auto samples = proj_moment_samples(obj, query, m, ens, workers);
  return summarize_samples(samples, ens.weights());
}

struct MomentMode {
  bool projected = false;
  int m = 0;

  static MomentMode full() { return {false, 0}; }
  static MomentMode slice(int m) { return {true, m}; }
};

/// Self-normalized importance-sampling estimate; the ensemble must carry weights.
inline MomentEstimate reweighted_estimate(const GaussianMixture& obj, const MomentQuery& query, MomentMode mode,
                                          const RotationEnsemble& ens, unsigned workers = default_workers()) {
  if (!ens.has_weights()) throw ValidationError("reweighted estimate needs an ensemble with importance weights");
  const auto samples = mode.projected ? proj_moment_samples(obj, query, mode.m, ens, workers)
                                      : full_moment_samples(obj, query, ens, workers);
  return summarize_samples(samples, ens.weights());
}

}  // namespace momentlift
