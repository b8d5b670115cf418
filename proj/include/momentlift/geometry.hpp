#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "momentlift/errors.hpp"
#include "momentlift/rng.hpp"

namespace momentlift {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kOrthogonalityTolerance = 1e-12;
inline constexpr double kDefaultRankTolerance = 1e-10;

inline double max_abs_deviation_from_identity(const Matrix& gram) {
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Element of SO(n). Construction checks orthogonality and unit determinant.
class RotationMatrix {
 public:
  explicit RotationMatrix(Matrix entries, double tol = kOrthogonalityTolerance)
      : entries_(std::move(entries)) {
    if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
      throw DimensionError("rotation matrix must be square and non-empty");
    }
    if (!entries_.allFinite()) {
      throw ValidationError("rotation matrix has non-finite entries");
    }
    const double ortho = max_abs_deviation_from_identity(entries_.transpose() * entries_);
    if (ortho > tol) {
      throw ValidationError("matrix is not orthogonal (max |R^T R - I| = " + std::to_string(ortho) + ")");
    }
    const double det = entries_.determinant();
    if (std::abs(det - 1.0) > tol) {
      throw ValidationError("matrix determinant is " + std::to_string(det) + ", expected 1");
    }
  }

  static RotationMatrix identity(int n) {
    if (n < 1) throw DimensionError("rotation dimension must be positive");
    return RotationMatrix(Matrix::Identity(n, n));
  }

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Matrix& matrix() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

  RotationMatrix inverse() const { return RotationMatrix(entries_.transpose()); }

  friend RotationMatrix operator*(const RotationMatrix& a, const RotationMatrix& b) {
    if (a.dim() != b.dim()) throw DimensionError("rotation dimensions differ");
    return RotationMatrix(a.entries_ * b.entries_);
  }

 private:
  Matrix entries_;
};

/// iota: R^m -> R^n, pads with n - m zeros.
inline Vector canonical_embed(const Vector& eta, int n) {
  const auto m = eta.size();
  if (m > n) {
    throw DimensionError("cannot embed a vector of dimension " + std::to_string(m) + " into R^" +
                         std::to_string(n));
  }
  Vector out = Vector::Zero(n);
  out.head(m) = eta;
  return out;
}

/// Haar-uniform draw from SO(n): Gaussian matrix, QR with positive diagonal in
/// the triangular factor (Haar on O(n)), then the last column is negated when
/// the determinant is -1.
inline RotationMatrix haar_rotation(int n, RngStream& stream) {
  if (n < 1) throw DimensionError("rotation dimension must be positive");
  Matrix gaussian(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) gaussian(i, j) = stream.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(gaussian);
  Matrix q = qr.householderQ();
  const auto& packed = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    if (packed(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  if (q.determinant() < 0.0) q.col(n - 1) = -q.col(n - 1);
  return RotationMatrix(std::move(q));
}

struct OrthonormalSpan {
  std::vector<Vector> basis;
  std::size_t rank = 0;
};

namespace detail {

// Two classical Gram-Schmidt passes against the current family.
inline void orthogonalize_against(Vector& w, std::span<const Vector> family) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& u : family) w -= u.dot(w) * u;
  }
}

inline void check_dimensions(std::span<const Vector> vectors, Eigen::Index n, const char* what) {
  for (const auto& v : vectors) {
    if (v.size() != n) {
      throw DimensionError(std::string(what) + ": expected vectors of dimension " + std::to_string(n) +
                           ", got " + std::to_string(v.size()));
    }
  }
}

}  // namespace detail

/// Orthonormal basis of span(vectors) with rank detection. A candidate is
/// dropped when its residual norm is <= rank_tol * (largest input norm, or 1
/// when every input is zero).
inline OrthonormalSpan gram_schmidt_span(std::span<const Vector> vectors,
                                         double rank_tol = kDefaultRankTolerance) {
  if (!(rank_tol > 0.0)) throw ValidationError("rank tolerance must be positive");
  OrthonormalSpan out;
  if (vectors.empty()) return out;
  detail::check_dimensions(vectors, vectors.front().size(), "gram_schmidt_span");

  double scale = 0.0;
  for (const auto& v : vectors) scale = std::max(scale, v.norm());
  if (scale == 0.0) scale = 1.0;
  const double threshold = rank_tol * scale;

  for (const auto& v : vectors) {
    if (static_cast<Eigen::Index>(out.basis.size()) == v.size()) break;
    Vector w = v;
    detail::orthogonalize_against(w, out.basis);
    const double norm = w.norm();
    if (norm > threshold) out.basis.push_back(w / norm);
  }
  out.rank = out.basis.size();
  return out;
}

inline void require_orthonormal(std::span<const Vector> family, double tol, const char* what) {
  if (family.empty()) return;
  const auto n = family.front().size();
  detail::check_dimensions(family, n, what);
  Matrix u(n, static_cast<Eigen::Index>(family.size()));
  for (std::size_t k = 0; k < family.size(); ++k) u.col(static_cast<Eigen::Index>(k)) = family[k];
  const double dev = max_abs_deviation_from_identity(u.transpose() * u);
  if (dev > tol) {
    throw ValidationError(std::string(what) + ": input family is not orthonormal (deviation " +
                          std::to_string(dev) + ")");
  }
}

/// Extends an orthonormal family of size r <= m <= n to an orthonormal basis
/// of R^n. Each step orthogonalizes e_1..e_n against the current family and
/// appends the one with the largest residual, lowest index on ties.
inline std::vector<Vector> complete_basis(std::span<const Vector> partial, int target, int n) {
  if (n < 1) throw DimensionError("ambient dimension must be positive");
  if (target < static_cast<int>(partial.size()) || target > n) {
    throw DimensionError("complete_basis requires r <= m <= n (r=" + std::to_string(partial.size()) +
                         ", m=" + std::to_string(target) + ", n=" + std::to_string(n) + ")");
  }
  detail::check_dimensions(partial, n, "complete_basis");
  require_orthonormal(partial, 1e-10, "complete_basis");

  std::vector<Vector> family(partial.begin(), partial.end());
  family.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(family.size()) < n) {
    double best_norm = -1.0;
    Vector best_residual;
    for (int i = 0; i < n; ++i) {
      Vector w = Vector::Unit(n, i);
      detail::orthogonalize_against(w, family);
      const double norm = w.norm();
      if (norm > best_norm) {
        best_norm = norm;
        best_residual = std::move(w);
      }
    }
    family.push_back(best_residual / best_norm);
  }
  return family;
}

/// Same contract as complete_basis, but the new directions are orthogonalized
/// Gaussian draws from `stream` instead of pivoted standard basis vectors.
inline std::vector<Vector> complete_basis_random(std::span<const Vector> partial, int n, RngStream& stream) {
  if (n < 1) throw DimensionError("ambient dimension must be positive");
  if (static_cast<int>(partial.size()) > n) throw DimensionError("partial family larger than n");
  detail::check_dimensions(partial, n, "complete_basis_random");
  require_orthonormal(partial, 1e-10, "complete_basis_random");

  std::vector<Vector> family(partial.begin(), partial.end());
  while (static_cast<int>(family.size()) < n) {
    Vector w(n);
    for (int i = 0; i < n; ++i) w(i) = stream.normal();
    detail::orthogonalize_against(w, family);
    const double norm = w.norm();
    // A Gaussian draw is almost surely well away from the current span.
    if (norm > 1e-6) family.push_back(w / norm);
  }
  return family;
}

/// Rotation Q and slice coordinates with omega_j = Q iota(eta_j).
struct SliceFrame {
  RotationMatrix q;
  std::vector<Vector> etas;
  int m = 0;
  int n = 0;
};

namespace detail {

inline void check_frame_request(std::span<const Vector> omegas, int m) {
  if (omegas.empty()) throw ValidationError("slice frame needs at least one frequency vector");
  const auto n = static_cast<int>(omegas.front().size());
  check_dimensions(omegas, n, "build_slice_frame");
  for (const auto& w : omegas) {
    if (!all_finite(w)) throw ValidationError("frequency vector has non-finite entries");
  }
  const auto d = static_cast<int>(omegas.size());
  if (m < 1 || m >= n) {
    throw ModelError("projection must be strictly dimension-reducing: need 1 <= m < n (m=" +
                     std::to_string(m) + ", n=" + std::to_string(n) + ")");
  }
  if (d > m) {
    throw ThresholdError("moment order d=" + std::to_string(d) + " exceeds slice dimension m=" +
                         std::to_string(m) + "; recovery requires d <= m");
  }
}

inline SliceFrame finish_frame(std::span<const Vector> omegas, const std::vector<Vector>& columns, int m) {
  const auto n = static_cast<int>(columns.size());
  Matrix q(n, n);
  for (int k = 0; k < n; ++k) q.col(k) = columns[static_cast<std::size_t>(k)];
  // Columns beyond m are orthogonal to every omega, so flipping one keeps eta.
  if (q.determinant() < 0.0) q.col(n - 1) = -q.col(n - 1);
  std::vector<Vector> etas;
  etas.reserve(omegas.size());
  for (const auto& w : omegas) etas.emplace_back((q.transpose() * w).head(m));
  return SliceFrame{RotationMatrix(std::move(q)), std::move(etas), m, n};
}

}  // namespace detail

/// Deterministic slice frame: Gram-Schmidt on the queries, pivoted completion,
/// determinant fixed on column n.
inline SliceFrame build_slice_frame(std::span<const Vector> omegas, int m) {
  detail::check_frame_request(omegas, m);
  const auto n = static_cast<int>(omegas.front().size());
  const auto span = gram_schmidt_span(omegas, kDefaultRankTolerance);
  return detail::finish_frame(omegas, complete_basis(span.basis, m, n), m);
}

/// Randomized slice frame: random completion of the query span followed by a
/// Haar rotation of the first m columns. Used to probe frame non-uniqueness.
inline SliceFrame build_random_slice_frame(std::span<const Vector> omegas, int m, RngStream& stream) {
  detail::check_frame_request(omegas, m);
  const auto n = static_cast<int>(omegas.front().size());
  const auto span = gram_schmidt_span(omegas, kDefaultRankTolerance);
  auto columns = complete_basis_random(span.basis, n, stream);

  const RotationMatrix mix = haar_rotation(m, stream);
  Matrix slice(n, m);
  for (int k = 0; k < m; ++k) slice.col(k) = columns[static_cast<std::size_t>(k)];
  const Matrix mixed = slice * mix.matrix();
  for (int k = 0; k < m; ++k) columns[static_cast<std::size_t>(k)] = mixed.col(k);
  return detail::finish_frame(omegas, columns, m);
}

}  // namespace momentlift
