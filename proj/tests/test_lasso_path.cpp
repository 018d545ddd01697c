#include "doctest.h"

#include <cmath>
#include <random>

#include "hiersel/lasso_path.hpp"
#include "oracles.hpp"

using namespace hsel;

namespace {

// Columns with Z'Z/n = I.
Matrix orthonormal(Eigen::Index n, Eigen::Index p, std::mt19937_64& gen) {
  Matrix g(n, p);
  for (Eigen::Index j = 0; j < p; ++j) g.col(j) = oracle::gaussian(n, gen);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  return q * std::sqrt(static_cast<double>(n));
}

void check_kkt(const Matrix& z, const Vector& y, const RegularizationPath& path) {
  const double n = static_cast<double>(z.rows());
  double prev_t = -1.0;
  for (const auto& bp : path.breakpoints) {
    Vector b = bp.beta.to_dense();
    Vector c = z.transpose() * (y - z * b) / n;
    CHECK(std::abs(bp.t - b.lpNorm<1>()) < 1e-8);
    CHECK(bp.t > prev_t);
    prev_t = bp.t;
    CHECK(c.cwiseAbs().maxCoeff() <= bp.lambda + 1e-6);
    for (const auto& [j, v] : bp.beta.entries()) {
      CHECK(std::abs(c[static_cast<Eigen::Index>(j)] - bp.lambda * (v > 0 ? 1.0 : -1.0)) < 1e-6);
    }
    for (std::size_t j : bp.active_set) CHECK(std::abs(std::abs(c[static_cast<Eigen::Index>(j)]) - bp.lambda) < 1e-6);
  }
}

}  // namespace

TEST_CASE("response orthogonal to every column gives the single point beta = 0") {
  Matrix z(4, 2);
  z << 1, 1, 1, -1, -1, 1, -1, -1;
  Vector y(4);
  y << 1, -1, -1, 1;
  auto path = lars_path(z, y, 2);
  REQUIRE(path.breakpoints.size() == 1);
  CHECK(path.breakpoints[0].beta.support_size() == 0);
  CHECK(path.stalled);
}

TEST_CASE("path contract on random problems") {
  std::mt19937_64 gen(17);
  for (int rep = 0; rep < 30; ++rep) {
    Matrix z = oracle::unit_columns(20, 10, gen);
    Vector y = oracle::gaussian(20, gen);
    auto path = lars_path(z, y, 8);
    check_kkt(z, y, path);
    for (std::size_t k = 1; k < path.breakpoints.size(); ++k) {
      long diff = static_cast<long>(path.breakpoints[k].active_set.size()) -
                  static_cast<long>(path.breakpoints[k - 1].active_set.size());
      CHECK(std::abs(diff) == 1);
    }
    if (!path.stalled) {
      CHECK(path.last().active_set.size() == 8);
      for (std::size_t k = 0; k + 1 < path.breakpoints.size(); ++k)
        CHECK(path.breakpoints[k].active_set.size() < 8);
    }
  }
}

TEST_CASE("every knot solves the constrained problem (projected-gradient oracle)") {
  std::mt19937_64 gen(23);
  for (int rep = 0; rep < 4; ++rep) {
    Matrix z = oracle::unit_columns(20, 10, gen);
    Vector y = oracle::gaussian(20, gen);
    auto path = lars_path(z, y, 10);
    for (const auto& bp : path.breakpoints) {
      if (bp.t == 0.0) continue;
      Vector ref = oracle::lasso_constrained(z, y, bp.t, 20000);
      double rss_path = oracle::sq_norm(y - z * bp.beta.to_dense());
      double rss_ref = oracle::sq_norm(y - z * ref);
      CHECK(rss_path <= rss_ref + 1e-8);
    }
  }
}

TEST_CASE("orthonormal design: entry order and soft thresholding") {
  std::mt19937_64 gen(31);
  Matrix z = orthonormal(25, 6, gen);
  Vector y = oracle::gaussian(25, gen);
  Vector zy = z.transpose() * y / 25.0;
  auto path = lars_path(z, y, 6);
  std::vector<Eigen::Index> order(6);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(zy[a]) > std::abs(zy[b]); });
  REQUIRE(path.breakpoints.size() == 7);
  for (std::size_t k = 1; k < 7; ++k) {
    const auto& as = path.breakpoints[k].active_set;
    CHECK(std::find(as.begin(), as.end(), static_cast<std::size_t>(order[k - 1])) != as.end());
  }
  for (double r : {0.0, 0.05, 0.2, 0.5, 1.0, 2.0 * zy.cwiseAbs().maxCoeff() + 0.1}) {
    Vector b = lasso_penalized(z, y, r).to_dense();
    for (Eigen::Index j = 0; j < 6; ++j) CHECK(std::abs(b[j] - oracle::soft(zy[j], r / 2.0)) < 1e-8);
  }
}

TEST_CASE("lasso_penalized matches coordinate descent on random 30x15 problems") {
  std::mt19937_64 gen(41);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix z = oracle::unit_columns(30, 15, gen);
    Vector y = oracle::gaussian(30, gen);
    double rmax = 2.0 * (z.transpose() * y / 30.0).cwiseAbs().maxCoeff();
    for (double frac : {0.05, 0.3, 0.7}) {
      double r = frac * rmax;
      auto b = lasso_penalized(z, y, r);
      Vector ref = oracle::lasso_cd(z, y, r);
      CHECK(lasso_objective(z, y, b, r) <= oracle::lasso_obj(z, y, ref, r) + 1e-9);
      CHECK(std::abs(lasso_objective(z, y, b, r) - oracle::lasso_obj(z, y, ref, r)) < 1e-6);
    }
  }
}

TEST_CASE("lasso_penalized edge penalties") {
  std::mt19937_64 gen(43);
  Matrix z = oracle::unit_columns(20, 5, gen);
  Vector y = oracle::gaussian(20, gen);
  double rmax = 2.0 * (z.transpose() * y / 20.0).cwiseAbs().maxCoeff();
  CHECK(lasso_penalized(z, y, rmax * 1.01).support_size() == 0);
  Vector ls = z.colPivHouseholderQr().solve(y);
  Vector b = lasso_penalized(z, y, 0.0).to_dense();
  CHECK((b - ls).cwiseAbs().maxCoeff() < 1e-8);
  CHECK_THROWS_AS(lasso_penalized(z, y, -1.0), Error);
}

TEST_CASE("DesignMatrix overloads agree with the matrix versions") {
  std::mt19937_64 gen(47);
  Matrix raw = oracle::unit_columns(20, 6, gen);
  raw.col(2) *= 3.0;
  auto design = normalize_columns(raw);
  Vector y = oracle::gaussian(20, gen);
  auto a = lars_path(design, ResponseVector{y}, 4);
  auto b = lars_path(design.values(), y, 4);
  REQUIRE(a.breakpoints.size() == b.breakpoints.size());
  CHECK(a.last().beta == b.last().beta);
  CHECK(lasso_penalized(design, ResponseVector{y}, 0.1) == lasso_penalized(design.values(), y, 0.1));
}

TEST_CASE("stop size preconditions") {
  Matrix z = Matrix::Identity(3, 3);
  Vector y = Vector::Ones(3);
  CHECK_THROWS_AS(lars_path(z, y, 0), Error);
  CHECK_THROWS_AS(lars_path(z, y, 4), Error);
  CHECK_THROWS_AS(lars_path(z, Vector::Ones(2), 1), Error);
}

TEST_CASE("default_penalty examples") {
  CHECK(default_penalty(1.0, std::exp(1.0), 1.0) == doctest::Approx(1.0));
  CHECK(default_penalty(100, 150, 2.0) == doctest::Approx(0.4477).epsilon(1e-4));
  CHECK(default_penalty(100, 150, 1.0) / default_penalty(200, 150, 1.0) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(default_penalty(100, 150, 0.0), Error);
  CHECK_THROWS_AS(default_penalty(0, 150, 1.0), Error);
}

TEST_CASE("mark thresholds record the first knot beyond each mark") {
  std::mt19937_64 gen(53);
  Matrix z = oracle::unit_columns(40, 30, gen);
  Vector y = oracle::gaussian(40, gen);
  auto path = lars_path(z, y, 20);
  auto marks = mark_thresholds(path, 5);
  REQUIRE(!marks.empty());
  for (std::size_t i = 0; i < marks.size(); ++i) {
    CHECK(marks[i].mark == 5 * (i + 1));
    std::size_t first = 0;
    while (path.breakpoints[first].active_set.size() <= marks[i].mark) ++first;
    CHECK(marks[i].t == path.breakpoints[first - 1].t);
  }
  CHECK_THROWS_AS(mark_thresholds(path, 0), Error);
}

TEST_CASE("full paths with drops keep KKT and reach the penalized optimum") {
  std::mt19937_64 gen(1006);
  int drops = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Matrix z = oracle::unit_columns(20, 10, gen);
    Vector y = oracle::gaussian(20, gen);
    auto path = lars_path(z, y, 10);
    check_kkt(z, y, path);
    for (std::size_t k = 1; k < path.breakpoints.size(); ++k)
      drops += path.breakpoints[k].beta.support_size() < path.breakpoints[k].active_set.size();
    double rmax = 2.0 * (z.transpose() * y / 20.0).cwiseAbs().maxCoeff();
    for (double frac : {0.005, 0.02}) {
      double r = frac * rmax;
      Vector ref = oracle::lasso_cd(z, y, r);
      CHECK(lasso_objective(z, y, lasso_penalized(z, y, r), r) <= oracle::lasso_obj(z, y, ref, r) + 1e-9);
    }
  }
  CHECK(drops > 0);
}
