#include "doctest.h"

#include <random>

#include "hiersel/model_core.hpp"
#include "oracles.hpp"

using namespace hsel;

TEST_CASE("normalize_columns leaves a +-1 column unchanged") {
  Matrix raw(6, 1);
  raw << 1, -1, 1, -1, 1, -1;
  auto z = normalize_columns(raw);
  CHECK(z.values().isApprox(raw));
  CHECK(z.column_scales()[0] == doctest::Approx(1.0));
}

TEST_CASE("normalize_columns maps a constant column to its sign") {
  Matrix raw = Matrix::Constant(5, 2, -3.5);
  raw.col(1).setConstant(0.25);
  auto z = normalize_columns(raw);
  for (int i = 0; i < 5; ++i) {
    CHECK(z.values()(i, 0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(z.values()(i, 1) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(z.column_scales()[0] == doctest::Approx(3.5));
  CHECK(z.column_scales()[1] == doctest::Approx(0.25));
}

TEST_CASE("normalize_columns rejects a zero column") {
  Matrix raw = Matrix::Ones(4, 3);
  raw.col(1).setZero();
  try {
    normalize_columns(raw);
    FAIL("expected ZeroColumn");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::zero_column);
  }
  Matrix tiny = Matrix::Ones(4, 2);
  tiny.col(0).setConstant(1e-14);
  CHECK_THROWS_AS(normalize_columns(tiny), Error);
}

TEST_CASE("normalized design has unit Gram diagonal, positive scales, and is idempotent") {
  std::mt19937_64 gen(11);
  Matrix raw = oracle::unit_columns(30, 7, gen);
  for (Eigen::Index j = 0; j < 7; ++j) raw.col(j) *= 0.1 + static_cast<double>(j);
  auto z = normalize_columns(raw);
  Matrix gram = z.values().transpose() * z.values() / 30.0;
  for (Eigen::Index j = 0; j < 7; ++j) CHECK(std::abs(gram(j, j) - 1.0) < 1e-10);
  CHECK((z.column_scales().array() > 0).all());
  CHECK((z.raw() - raw).cwiseAbs().maxCoeff() < 1e-12);
  auto twice = normalize_columns(z.values());
  CHECK((twice.values() - z.values()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("empirical_sq_norm examples") {
  CHECK(empirical_sq_norm(Vector::Zero(5)) == 0.0);
  Vector v(2);
  v << 3, 4;
  CHECK(empirical_sq_norm(v) == 12.5);
  CHECK(empirical_sq_norm(Vector::Ones(17)) == doctest::Approx(1.0));
}

TEST_CASE("SparseCoefficients never stores zeros and reports exact l1") {
  SparseCoefficients b(5);
  b.set(1, 2.5);
  b.set(3, -1.25);
  b.set(4, 0.0);
  CHECK(b.support_size() == 2);
  CHECK(b.l1_norm() == 3.75);
  b.set(1, 0.0);
  CHECK(b.support() == std::vector<std::size_t>{3});
  CHECK(b.get(1) == 0.0);
  CHECK_THROWS_AS(b.set(5, 1.0), Error);
  Vector d(4);
  d << 0, 1, 0, -2;
  auto s = SparseCoefficients::from_dense(d);
  CHECK(s.dimension() == 4);
  CHECK(s.support() == std::vector<std::size_t>{1, 3});
  CHECK(s.to_dense() == d);
}

TEST_CASE("prediction_loss examples") {
  std::mt19937_64 gen(3);
  Matrix z = oracle::unit_columns(10, 3, gen);
  SparseCoefficients zero(3);
  CHECK(prediction_loss(z, zero, Vector::Zero(10)) == 0.0);

  Vector dense(3);
  dense << 0.5, -1.0, 2.0;
  auto beta = SparseCoefficients::from_dense(dense);
  Vector f = z * dense;
  CHECK(prediction_loss(z, beta, f) < 1e-28);

  Vector g = oracle::gaussian(10, gen);
  CHECK(prediction_loss(z, beta, g) == doctest::Approx(oracle::loss(z, dense, g)).epsilon(1e-14));
  auto design = normalize_columns(z);
  CHECK(prediction_loss(design, beta, g) == doctest::Approx(oracle::loss(design.values(), dense, g)).epsilon(1e-14));

  CHECK_THROWS_AS(prediction_loss(z, beta, Vector::Zero(9)), Error);
  CHECK_THROWS_AS(prediction_loss(z, SparseCoefficients(4), g), Error);
}

TEST_CASE("prediction_loss is invariant under a consistent column permutation") {
  std::mt19937_64 gen(5);
  Matrix z = oracle::unit_columns(12, 5, gen);
  Vector b = oracle::gaussian(5, gen);
  Vector f = oracle::gaussian(12, gen);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
  perm.indices() << 3, 0, 4, 1, 2;
  Matrix zp = z * perm;
  Vector bp = perm.transpose() * b;
  CHECK(prediction_loss(zp, SparseCoefficients::from_dense(bp), f) ==
        doctest::Approx(prediction_loss(z, SparseCoefficients::from_dense(b), f)).epsilon(1e-13));
}

TEST_CASE("center_columns removes means") {
  Matrix raw(3, 2);
  raw << 1, 10, 2, 20, 3, 60;
  auto c = center_columns(raw);
  CHECK(c.means[0] == doctest::Approx(2.0));
  CHECK(c.means[1] == doctest::Approx(30.0));
  CHECK(c.values.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
}
