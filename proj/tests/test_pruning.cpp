#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "hiersel/pruning.hpp"
#include "oracles.hpp"

using namespace hsel;

namespace {

SparseCoefficients coefs(std::initializer_list<double> values) {
  SparseCoefficients b(values.size());
  std::size_t j = 0;
  for (double v : values) b.set(j++, v);
  return b;
}

SparseCoefficients random_sparse(std::size_t p, std::size_t k, std::mt19937_64& gen) {
  std::vector<std::size_t> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), gen);
  std::normal_distribution<double> nd;
  SparseCoefficients b(p);
  for (std::size_t t = 0; t < k; ++t) b.set(idx[t], nd(gen));
  return b;
}

void check_distribution(const SparseCoefficients& beta, const RandomizationDistribution& d) {
  double drop_total = 0.0;
  for (const auto& [j, p] : d.probs) {
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
    CHECK(std::abs(d.drop_probs.at(j) - (1.0 - p)) < 1e-12);
    drop_total += d.drop_probs.at(j);
    if (std::abs(beta.get(j)) >= beta.l1_norm() / static_cast<double>(beta.support_size() - 1)) CHECK(p == 1.0);
  }
  CHECK(std::abs(drop_total - 1.0) < 1e-10);
  CHECK(d.c >= 1.0);
  std::vector<std::pair<double, std::size_t>> by_size;
  for (const auto& [j, v] : beta.entries()) by_size.emplace_back(std::abs(v), j);
  std::sort(by_size.begin(), by_size.end());
  CHECK(d.probs.at(by_size[0].second) < 1.0);
  CHECK(d.probs.at(by_size[1].second) < 1.0);
}

}  // namespace

TEST_CASE("randomization_probs examples") {
  auto flat = randomization_probs(coefs({1, 1, 1, 1}));
  CHECK(flat.c == doctest::Approx(1.0));
  for (const auto& [j, p] : flat.probs) {
    CHECK(p == doctest::Approx(0.75));
    CHECK(flat.drop_probs.at(j) == doctest::Approx(0.25));
  }

  auto b = coefs({4, 1, 1});
  auto d = randomization_probs(b);
  CHECK(d.c == doctest::Approx(1.5));
  CHECK(d.probs.at(0) == 1.0);
  CHECK(d.probs.at(1) == doctest::Approx(0.5));
  CHECK(d.probs.at(2) == doctest::Approx(0.5));
  CHECK(d.drop_probs.at(0) == 0.0);
  CHECK(d.source_l1 == 6.0);

  auto two = randomization_probs(coefs({10, 1}));
  CHECK(two.c == doctest::Approx(1.0));
  CHECK(two.probs.at(0) == doctest::Approx(10.0 / 11.0));
  CHECK(two.probs.at(1) == doctest::Approx(1.0 / 11.0));
  CHECK(two.drop_probs.at(0) == doctest::Approx(1.0 / 11.0));

  try {
    randomization_probs(coefs({0, 3}));
    FAIL("expected SupportTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::support_too_small);
  }
}

TEST_CASE("randomization_probs agrees with the bisection oracle") {
  std::mt19937_64 gen(101);
  std::exponential_distribution<double> ex(1.0);
  for (int rep = 0; rep < 300; ++rep) {
    std::size_t k = 2 + static_cast<std::size_t>(gen() % 12);
    SparseCoefficients b(k);
    std::vector<double> a;
    for (std::size_t j = 0; j < k; ++j) {
      double v = ex(gen);
      if (gen() % 4 == 0) v *= 20.0;
      b.set(j, (gen() % 2 ? 1.0 : -1.0) * v);
      a.push_back(v);
    }
    auto d = randomization_probs(b);
    CHECK(d.c == doctest::Approx(oracle::randomization_c(a)).epsilon(1e-9));
    check_distribution(b, d);
  }
}

TEST_CASE("drop_one examples") {
  auto b = coefs({4, 1, 1});
  auto d = randomization_probs(b);
  auto out = drop_one_at(b, d, 1);
  CHECK(out.get(0) == 4.0);
  CHECK(out.get(1) == 0.0);
  CHECK(out.get(2) == 2.0);
  CHECK(out.l1_norm() == 6.0);

  Rng rng(7);
  std::map<std::size_t, int> counts;
  for (int i = 0; i < 4000; ++i) {
    auto r = drop_one(b, d, rng);
    CHECK(r.dropped != 0);
    CHECK(r.beta.get(0) == 4.0);
    counts[r.dropped]++;
  }
  CHECK(counts[1] > 1800);
  CHECK(counts[2] > 1800);

  auto sym = coefs({1, 1});
  auto ds = randomization_probs(sym);
  auto left = drop_one_at(sym, ds, 1);
  CHECK(left.get(0) == 2.0);
  CHECK(left.support_size() == 1);
}

TEST_CASE("single-step unbiasedness by enumeration") {
  std::mt19937_64 gen(103);
  for (int rep = 0; rep < 100; ++rep) {
    auto b = random_sparse(8, 2 + gen() % 7, gen);
    auto d = randomization_probs(b);
    Vector mean = Vector::Zero(8);
    for (const auto& [j, q] : d.drop_probs) {
      if (q > 0) mean += q * drop_one_at(b, d, j).to_dense();
    }
    CHECK((mean - b.to_dense()).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, b.l1_norm()));
  }
}

TEST_CASE("prune_randomized contract") {
  std::mt19937_64 gen(107);
  for (int rep = 0; rep < 200; ++rep) {
    std::size_t kt = 3 + gen() % 10;
    std::size_t k = 2 + gen() % (kt - 2);
    auto b = random_sparse(20, kt, gen);
    Rng rng(rep, 3);
    auto r = prune_randomized(b, k, rng);
    CHECK(r.beta.support_size() == k);
    CHECK(r.trace.steps.size() == kt - k);
    CHECK(std::abs(r.beta.l1_norm() - b.l1_norm()) < 1e-12);
    for (const auto& s : r.trace.steps) CHECK(std::abs(s.l1_after - s.l1_before) < 1e-12);
    CHECK(r.trace.seed == static_cast<std::uint64_t>(rep));
  }
  auto b = coefs({4, 1, 1});
  Rng rng(1);
  try {
    prune_randomized(b, 3, rng);
    FAIL("expected TargetTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::target_too_large);
  }
  try {
    prune_randomized(coefs({1, 0, 0}), 1, rng);
    FAIL("expected SupportTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::support_too_small);
  }
}

TEST_CASE("prune_randomized on (4,1,1) to K = 2") {
  auto b = coefs({4, 1, 1});
  std::set<std::vector<double>> seen;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    auto r = prune_randomized(b, 2, rng);
    CHECK(r.beta.get(0) == 4.0);
    Vector d = r.beta.to_dense();
    seen.insert({d[0], d[1], d[2]});
  }
  CHECK(seen == std::set<std::vector<double>>{{4, 0, 2}, {4, 2, 0}});
}

TEST_CASE("identical seeds give identical traces") {
  std::mt19937_64 gen(109);
  auto b = random_sparse(30, 12, gen);
  Rng a(42, 5);
  Rng c(42, 5);
  auto r1 = prune_randomized(b, 4, a);
  auto r2 = prune_randomized(b, 4, c);
  CHECK(r1.beta == r2.beta);
  for (std::size_t i = 0; i < r1.trace.steps.size(); ++i) CHECK(r1.trace.steps[i].dropped == r2.trace.steps[i].dropped);
}

TEST_CASE("retention when K~ equals the number of large coordinates plus zeros") {
  // Large coordinates strictly above ||b||_1/(K~-1) keep their values.
  SparseCoefficients b(6);
  b.set(0, 10.0);
  b.set(1, -9.0);
  b.set(2, 0.5);
  b.set(3, 0.25);
  b.set(4, 0.2);
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(s);
    auto r = prune_randomized(b, 3, rng);
    CHECK(r.beta.get(0) == 10.0);
    CHECK(r.beta.get(1) == -9.0);
  }
}

TEST_CASE("prune_maurey examples") {
  auto b = coefs({2, -1, 1});
  std::map<std::size_t, std::size_t> counts{{0, 2}};
  auto m = maurey_from_counts(b, counts);
  CHECK(m.get(0) == 4.0);
  CHECK(m.support_size() == 1);

  SparseCoefficients single(4);
  single.set(2, -3.0);
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(s);
    CHECK(prune_maurey(single, 3, rng) == single);
  }

  std::mt19937_64 gen(113);
  for (int rep = 0; rep < 200; ++rep) {
    auto x = random_sparse(15, 2 + gen() % 10, gen);
    std::size_t k = 1 + gen() % 8;
    Rng rng(rep);
    auto out = prune_maurey(x, k, rng);
    CHECK(out.support_size() <= k);
    CHECK(std::abs(out.l1_norm() - x.l1_norm()) < 1e-12 * std::max(1.0, x.l1_norm()));
    for (const auto& [j, v] : out.entries()) CHECK((v > 0) == (x.get(j) > 0));
  }

  bool differs = false;
  for (std::uint64_t s = 0; s < 50 && !differs; ++s) {
    Rng rng(s);
    differs = prune_maurey(coefs({4, 1, 1}), 2, rng).get(0) != 4.0;
  }
  CHECK(differs);
  Rng rng(0);
  CHECK_THROWS_AS(prune_maurey(SparseCoefficients(3), 2, rng), Error);
  CHECK_THROWS_AS(prune_maurey(b, 0, rng), Error);
}

TEST_CASE("verify_maurey_bound examples") {
  Matrix z = Matrix::Identity(2, 2) * std::sqrt(2.0);
  auto b = coefs({1, 1});
  Vector f = z * b.to_dense();
  auto check = verify_maurey_bound(z, f, b, 3);
  CHECK(check.bound == doctest::Approx(4.0 / 3.0));
  CHECK(check.holds());
  CHECK(check.exact_expected_loss <= 4.0 / 3.0 + 1e-12);
  CHECK((check.expected_beta - b.to_dense()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(check.covariance_error < 1e-12);

  std::mt19937_64 gen(127);
  Matrix zz = oracle::unit_columns(10, 3, gen);
  auto x = coefs({0.7, -0.2, 1.3});
  Vector g = oracle::gaussian(10, gen);
  auto c2 = verify_maurey_bound(zz, g, x, 2);
  auto c4 = verify_maurey_bound(zz, g, x, 4);
  double base = prediction_loss(zz, x, g);
  CHECK(c2.bound - base == doctest::Approx(2.0 * (c4.bound - base)));

  SparseCoefficients big(12);
  for (std::size_t j = 0; j < 12; ++j) big.set(j, 1.0);
  CHECK_THROWS_AS(verify_maurey_bound(Matrix::Identity(12, 12), Vector::Zero(12), big, 6), Error);
}

TEST_CASE("verify_theorem1_bound matches brute-force recursion") {
  std::mt19937_64 gen(131);
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t kt = 3 + gen() % 4;
    std::size_t k = 2 + gen() % (kt - 2);
    Matrix z = oracle::unit_columns(12, 8, gen);
    auto b = random_sparse(8, kt, gen);
    Vector f = oracle::gaussian(12, gen);
    auto check = verify_theorem1_bound(z, f, b, k);
    double ref = oracle::randomized_expected_loss(z, f, b.to_dense(), k);
    CHECK(check.exact_expected_loss == doctest::Approx(ref).epsilon(1e-10));
    CHECK(check.holds());
    CHECK((check.expected_beta - b.to_dense()).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, b.l1_norm()));
  }
}

TEST_CASE("drop-one bound with a perfect fit") {
  std::mt19937_64 gen(137);
  Matrix z = oracle::unit_columns(10, 5, gen);
  auto b = random_sparse(5, 5, gen);
  Vector f = z * b.to_dense();
  for (std::size_t k = 2; k < 5; ++k) {
    auto c = verify_theorem1_bound(z, f, b, k);
    double l1 = b.l1_norm();
    CHECK(c.exact_expected_loss >= 0.0);
    CHECK(c.exact_expected_loss <= l1 * l1 * (1.0 / (k - 1.0) - 1.0 / 4.0) + 1e-10);
  }
  CHECK_THROWS_AS(verify_theorem1_bound(z, f, random_sparse(5, 2, gen), 1), Error);
  SparseCoefficients nine(9);
  for (std::size_t j = 0; j < 9; ++j) nine.set(j, 1.0 + j);
  try {
    verify_theorem1_bound(oracle::unit_columns(10, 9, gen), Vector::Zero(10), nine, 4);
    FAIL("expected EnumerationTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::enumeration_too_large);
  }
}

TEST_CASE("Monte Carlo agrees with the enumerated expectation for (4,1,1)") {
  std::mt19937_64 gen(139);
  Matrix z = oracle::unit_columns(10, 3, gen);
  Vector f = oracle::gaussian(10, gen);
  auto b = coefs({4, 1, 1});
  auto exact = verify_theorem1_bound(z, f, b, 2).exact_expected_loss;
  Rng rng(2024);
  const int reps = 1000000;
  double sum = 0.0;
  double sumsq = 0.0;
  auto d = randomization_probs(b);
  for (int i = 0; i < reps; ++i) {
    auto r = drop_one(b, d, rng);
    double l = prediction_loss(z, r.beta, f);
    sum += l;
    sumsq += l * l;
  }
  double mean = sum / reps;
  double se = std::sqrt((sumsq / reps - mean * mean) / reps);
  CHECK(std::abs(mean - exact) <= 3.0 * se + 1e-12);
}

TEST_CASE("single-step moments") {
  std::mt19937_64 gen(149);
  for (int rep = 0; rep < 30; ++rep) {
    Matrix z = oracle::unit_columns(9, 6, gen);
    auto b = random_sparse(6, 2 + gen() % 5, gen);
    Vector f = oracle::gaussian(9, gen);
    auto m = single_step_moments(z, f, b);
    CHECK(m.expected_loss == doctest::Approx(m.variance_identity).epsilon(1e-10));
    CHECK(m.expected_loss <= m.step_bound + 1e-10);
    CHECK((m.expected_beta - b.to_dense()).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, b.l1_norm()));
    Matrix diff = m.covariance - m.covariance_reduced;
    CHECK(diff.isDiagonal(1e-14));
  }
}

TEST_CASE("prune_backward examples") {
  std::mt19937_64 gen(151);
  Matrix q;
  {
    Matrix g(20, 5);
    for (int j = 0; j < 5; ++j) g.col(j) = oracle::gaussian(20, gen);
    Eigen::HouseholderQR<Matrix> qr(g);
    q = Matrix(qr.householderQ() * Matrix::Identity(20, 5)) * std::sqrt(20.0);
  }
  Vector y = oracle::gaussian(20, gen);
  Vector zy = q.transpose() * y / 20.0;
  auto full = SparseCoefficients::from_dense(Vector::Ones(5));
  std::vector<int> order{0, 1, 2, 3, 4};
  std::sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(zy[a]) < std::abs(zy[b]); });
  auto pruned = prune_backward(q, y, full, 3);
  CHECK(pruned.support() == [&] {
    std::vector<std::size_t> s{static_cast<std::size_t>(order[2]), static_cast<std::size_t>(order[3]),
                               static_cast<std::size_t>(order[4])};
    std::sort(s.begin(), s.end());
    return s;
  }());
  for (std::size_t j : pruned.support()) CHECK(pruned.get(j) == doctest::Approx(zy[static_cast<Eigen::Index>(j)]));

  Matrix z = oracle::unit_columns(20, 4, gen);
  Vector exact = z.col(0) + z.col(1);
  auto out = prune_backward(z, exact, SparseCoefficients::from_dense(Vector::Ones(4)), 2);
  CHECK(out.support() == std::vector<std::size_t>{0, 1});
  CHECK(prediction_loss(z, out, exact) < 1e-20);

  CHECK_THROWS_AS(prune_backward(z, exact, SparseCoefficients::from_dense(Vector::Ones(4)), 4), Error);
  Matrix dup = z;
  dup.col(3) = z.col(2);
  try {
    prune_backward(dup, exact, SparseCoefficients::from_dense(Vector::Ones(4)), 2);
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::rank_deficient);
  }
}

TEST_CASE("prune_backward single drop matches exhaustive search") {
  std::mt19937_64 gen(157);
  for (int rep = 0; rep < 50; ++rep) {
    Matrix z = oracle::unit_columns(20, 5, gen);
    Vector y = oracle::gaussian(20, gen);
    auto full = SparseCoefficients::from_dense(Vector::Ones(5));
    auto out = prune_backward(z, y, full, 4);
    auto dropped = oracle::best_single_drop(z, y, {0, 1, 2, 3, 4});
    CHECK(out.get(static_cast<std::size_t>(dropped)) == 0.0);
    CHECK(out.support_size() == 4);
  }
}

TEST_CASE("backward ties drop the higher index") {
  Matrix z(4, 3);
  z << 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1;
  Vector y = z.col(0) * 2.0 + z.col(1) + z.col(2);
  auto out = prune_backward(z, y, SparseCoefficients::from_dense(Vector::Ones(3)), 2);
  CHECK(out.support() == std::vector<std::size_t>{0, 1});
}

TEST_CASE("least_squares_on matches a dense solve") {
  std::mt19937_64 gen(163);
  Matrix z = oracle::unit_columns(15, 6, gen);
  Vector y = oracle::gaussian(15, gen);
  auto b = least_squares_on(z, y, {1, 4});
  Matrix sub(15, 2);
  sub.col(0) = z.col(1);
  sub.col(1) = z.col(4);
  Vector ref = sub.colPivHouseholderQr().solve(y);
  CHECK(b.get(1) == doctest::Approx(ref[0]));
  CHECK(b.get(4) == doctest::Approx(ref[1]));
}
