#include "hiersel/model_core.hpp"

#include <cmath>
#include <string>

namespace hsel {

Matrix DesignMatrix::raw() const {
  return values_ * scales_.asDiagonal();
}

DesignMatrix normalize_columns(const Matrix& raw) {
  require(raw.rows() >= 1, "normalize_columns: matrix has no rows");
  const double n = static_cast<double>(raw.rows());
  const double max_abs = raw.size() > 0 ? raw.cwiseAbs().maxCoeff() : 0.0;

  DesignMatrix out;
  out.values_ = raw;
  out.scales_.resize(raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double rms = std::sqrt(raw.col(j).squaredNorm() / n);
    if (!(rms > 1e-12 * max_abs) || rms == 0.0) {
      fail(ErrorCode::zero_column, "column " + std::to_string(j) + " is identically zero");
    }
    out.values_.col(j) /= rms;
    out.scales_[j] = rms;
  }
  return out;
}

SparseCoefficients SparseCoefficients::from_dense(const Vector& dense) {
  SparseCoefficients out(static_cast<std::size_t>(dense.size()));
  for (Eigen::Index j = 0; j < dense.size(); ++j) {
    if (dense[j] != 0.0) out.entries_.emplace(static_cast<std::size_t>(j), dense[j]);
  }
  return out;
}

std::vector<std::size_t> SparseCoefficients::support() const {
  std::vector<std::size_t> s;
  s.reserve(entries_.size());
  for (const auto& [j, v] : entries_) s.push_back(j);
  return s;
}

double SparseCoefficients::get(std::size_t j) const {
  auto it = entries_.find(j);
  return it == entries_.end() ? 0.0 : it->second;
}

void SparseCoefficients::set(std::size_t j, double v) {
  if (j >= p_) fail(ErrorCode::dimension_mismatch, "coefficient index out of range");
  if (v == 0.0) {
    entries_.erase(j);
  } else {
    entries_[j] = v;
  }
}

double SparseCoefficients::l1_norm() const {
  double s = 0.0;
  for (const auto& [j, v] : entries_) s += std::abs(v);
  return s;
}

Vector SparseCoefficients::to_dense() const {
  Vector d = Vector::Zero(static_cast<Eigen::Index>(p_));
  for (const auto& [j, v] : entries_) d[static_cast<Eigen::Index>(j)] = v;
  return d;
}

double empirical_sq_norm(const Vector& v) {
  require(v.size() >= 1, "empirical_sq_norm: empty vector");
  return v.squaredNorm() / static_cast<double>(v.size());
}

Vector apply(const Matrix& z, const SparseCoefficients& beta) {
  if (static_cast<std::size_t>(z.cols()) != beta.dimension()) {
    fail(ErrorCode::dimension_mismatch, "design has " + std::to_string(z.cols()) +
                                            " columns but coefficients have dimension " +
                                            std::to_string(beta.dimension()));
  }
  Vector out = Vector::Zero(z.rows());
  for (const auto& [j, v] : beta.entries()) out += v * z.col(static_cast<Eigen::Index>(j));
  return out;
}

Vector apply(const DesignMatrix& z, const SparseCoefficients& beta) {
  return apply(z.values(), beta);
}

double prediction_loss(const Matrix& z, const SparseCoefficients& beta, const Vector& f) {
  if (f.size() != z.rows()) {
    fail(ErrorCode::dimension_mismatch, "response length does not match design rows");
  }
  return empirical_sq_norm(f - apply(z, beta));
}

double prediction_loss(const DesignMatrix& z, const SparseCoefficients& beta, const Vector& f) {
  return prediction_loss(z.values(), beta, f);
}

Centered center_columns(const Matrix& raw) {
  require(raw.rows() >= 1, "center_columns: matrix has no rows");
  Centered c;
  c.means = raw.colwise().mean().transpose();
  c.values = raw.rowwise() - c.means.transpose();
  return c;
}

}  // namespace hsel
