#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "hiersel/error.hpp"

namespace hsel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Column-normalized design: every column has unit empirical second moment,
// i.e. diag(Z'Z/n) == 1.
class DesignMatrix {
 public:
  DesignMatrix() = default;

  const Matrix& values() const noexcept { return values_; }
  const Vector& column_scales() const noexcept { return scales_; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  auto col(std::size_t j) const { return values_.col(static_cast<Eigen::Index>(j)); }

  /// Multiplies each column back by its scale.
  Matrix raw() const;

  friend DesignMatrix normalize_columns(const Matrix& raw);

 private:
  Matrix values_;
  Vector scales_;
};

/// Rescales every column to unit root-mean-square. Throws ZeroColumn when a
/// column's RMS is below 1e-12 times the largest absolute entry.
DesignMatrix normalize_columns(const Matrix& raw);

/// Sparse coefficient vector in ambient dimension p. Zero values are never
/// stored.
class SparseCoefficients {
 public:
  SparseCoefficients() = default;
  explicit SparseCoefficients(std::size_t p) : p_(p) {}

  static SparseCoefficients from_dense(const Vector& dense);

  std::size_t dimension() const noexcept { return p_; }
  std::size_t support_size() const noexcept { return entries_.size(); }
  const std::map<std::size_t, double>& entries() const noexcept { return entries_; }

  /// Ascending column indices of the nonzero entries.
  std::vector<std::size_t> support() const;

  double get(std::size_t j) const;
  /// Stores v at j, erasing the entry when v == 0.
  void set(std::size_t j, double v);

  double l1_norm() const;
  Vector to_dense() const;

  bool operator==(const SparseCoefficients&) const = default;

 private:
  std::size_t p_ = 0;
  std::map<std::size_t, double> entries_;
};

struct ResponseVector {
  Vector values;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
};

/// n^-1 * sum v_i^2.
double empirical_sq_norm(const Vector& v);

/// Z * beta as a dense n-vector.
Vector apply(const DesignMatrix& z, const SparseCoefficients& beta);
Vector apply(const Matrix& z, const SparseCoefficients& beta);

/// ||f - Z beta||^2 under the empirical norm.
double prediction_loss(const DesignMatrix& z, const SparseCoefficients& beta, const Vector& f);
double prediction_loss(const Matrix& z, const SparseCoefficients& beta, const Vector& f);

// Column centering, used to give the model an unpenalized intercept.
struct Centered {
  Matrix values;
  Vector means;
};

Centered center_columns(const Matrix& raw);

}  // namespace hsel
