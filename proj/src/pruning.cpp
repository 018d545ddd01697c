#include "hiersel/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

namespace hsel {

RandomizationDistribution randomization_probs(const SparseCoefficients& beta) {
  const std::size_t kt = beta.support_size();
  if (kt < 2) {
    fail(ErrorCode::support_too_small,
         "randomization needs at least 2 nonzero coordinates, got " + std::to_string(kt));
  }
  std::vector<std::pair<std::size_t, double>> mags;
  mags.reserve(kt);
  for (const auto& [j, v] : beta.entries()) mags.emplace_back(j, std::abs(v));
  std::stable_sort(mags.begin(), mags.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  const double l1 = beta.l1_norm();
  const double km1 = static_cast<double>(kt - 1);

  // Sum of the unsaturated magnitudes, smallest first.
  auto tail_sum = [&](std::size_t from) {
    double s = 0.0;
    for (std::size_t i = kt; i-- > from;) s += mags[i].second;
    return s;
  };

  // With the top m coordinates saturated at p = 1, the rest satisfy
  // p_i = (K-1-m) |b_i| / R_m. Take the smallest m for which that keeps every
  // unsaturated p_i <= 1; the two smallest coordinates are never saturated.
  std::size_t m = 0;
  double rest = tail_sum(0);
  while (m + 2 < kt && (km1 - static_cast<double>(m)) * mags[m].second > rest) {
    ++m;
    rest = tail_sum(m);
  }
  const double free_mass = km1 - static_cast<double>(m);

  RandomizationDistribution dist;
  dist.source_l1 = l1;
  dist.c = m == 0 ? 1.0 : std::max(1.0, free_mass * l1 / (km1 * rest));
  for (std::size_t i = 0; i < kt; ++i) {
    const auto [j, a] = mags[i];
    if (i < m) {
      dist.probs[j] = 1.0;
      dist.drop_probs[j] = 0.0;
    } else {
      dist.probs[j] = free_mass * a / rest;
      dist.drop_probs[j] = (rest - free_mass * a) / rest;
    }
  }
  return dist;
}

SparseCoefficients drop_one_at(const SparseCoefficients& beta, const RandomizationDistribution& dist,
                               std::size_t dropped) {
  if (!dist.probs.count(dropped)) {
    fail(ErrorCode::invalid_argument, "dropped index " + std::to_string(dropped) + " is not in the support");
  }
  SparseCoefficients out(beta.dimension());
  for (const auto& [j, v] : beta.entries()) {
    if (j == dropped) continue;
    auto it = dist.probs.find(j);
    if (it == dist.probs.end()) {
      fail(ErrorCode::invalid_argument, "distribution was built from a different support");
    }
    out.set(j, it->second == 1.0 ? v : v / it->second);
  }
  return out;
}

DropResult drop_one(const SparseCoefficients& beta, const RandomizationDistribution& dist, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t chosen = 0;
  bool found = false;
  for (const auto& [j, q] : dist.drop_probs) {
    if (q <= 0.0) continue;
    chosen = j;
    found = true;
    cum += q;
    if (u < cum) break;
  }
  if (!found) fail(ErrorCode::invalid_argument, "distribution has no droppable coordinate");
  return {drop_one_at(beta, dist, chosen), chosen};
}

RandomizedPrune prune_randomized(const SparseCoefficients& beta, std::size_t k, Rng& rng) {
  const std::size_t kt = beta.support_size();
  if (kt < 2) fail(ErrorCode::support_too_small, "randomized pruning needs at least 2 nonzeros");
  if (k >= kt) {
    fail(ErrorCode::target_too_large,
         "target size " + std::to_string(k) + " is not below the support size " + std::to_string(kt));
  }
  require(k >= 2, "randomized pruning needs a target size of at least 2");

  RandomizedPrune out;
  out.trace.seed = rng.seed();
  out.trace.stream = rng.stream();
  SparseCoefficients current = beta;
  while (current.support_size() > k) {
    PruneStep step;
    step.distribution = randomization_probs(current);
    step.l1_before = current.l1_norm();
    auto dropped = drop_one(current, step.distribution, rng);
    step.dropped = dropped.dropped;
    step.l1_after = dropped.beta.l1_norm();
    step.result = dropped.beta;
    current = std::move(dropped.beta);
    out.trace.steps.push_back(std::move(step));
  }
  out.beta = std::move(current);
  return out;
}

SparseCoefficients maurey_from_counts(const SparseCoefficients& beta,
                                      const std::map<std::size_t, std::size_t>& counts) {
  std::size_t total = 0;
  for (const auto& [j, cnt] : counts) total += cnt;
  require(total >= 1, "maurey: no draws");
  const double l1 = beta.l1_norm();
  SparseCoefficients out(beta.dimension());
  for (const auto& [j, cnt] : counts) {
    if (cnt == 0) continue;
    const double v = beta.get(j);
    if (v == 0.0) fail(ErrorCode::invalid_argument, "maurey: draw outside the support");
    const double mag = l1 * static_cast<double>(cnt) / static_cast<double>(total);
    out.set(j, v > 0.0 ? mag : -mag);
  }
  return out;
}

SparseCoefficients prune_maurey(const SparseCoefficients& beta, std::size_t k, Rng& rng) {
  if (beta.support_size() < 1) fail(ErrorCode::support_too_small, "maurey: empty support");
  require(k >= 1, "maurey: need at least one draw");
  const double l1 = beta.l1_norm();
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t draw = 0; draw < k; ++draw) {
    const double u = rng.uniform() * l1;
    double cum = 0.0;
    std::size_t chosen = beta.entries().rbegin()->first;
    for (const auto& [j, v] : beta.entries()) {
      cum += std::abs(v);
      if (u < cum) {
        chosen = j;
        break;
      }
    }
    ++counts[chosen];
  }
  return maurey_from_counts(beta, counts);
}

namespace {

Matrix gather(const Matrix& z, const std::vector<std::size_t>& cols) {
  Matrix out(z.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t a = 0; a < cols.size(); ++a) out.col(static_cast<Eigen::Index>(a)) = z.col(static_cast<Eigen::Index>(cols[a]));
  return out;
}

std::string describe(const std::vector<std::size_t>& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "}";
}

void check_rank(const Matrix& zs, const std::vector<std::size_t>& support) {
  Eigen::ColPivHouseholderQR<Matrix> qr(zs);
  qr.setThreshold(1e-10);
  if (qr.rank() < zs.cols()) {
    fail(ErrorCode::rank_deficient, "least-squares refit is singular on support " + describe(support));
  }
}

}  // namespace

SparseCoefficients least_squares_on(const Matrix& z, const Vector& y, const std::vector<std::size_t>& support) {
  if (y.size() != z.rows()) fail(ErrorCode::dimension_mismatch, "response length does not match design rows");
  SparseCoefficients out(static_cast<std::size_t>(z.cols()));
  if (support.empty()) return out;
  const Matrix zs = gather(z, support);
  Eigen::ColPivHouseholderQR<Matrix> qr(zs);
  qr.setThreshold(1e-10);
  if (qr.rank() < zs.cols()) {
    fail(ErrorCode::rank_deficient, "least-squares refit is singular on support " + describe(support));
  }
  const Vector coef = qr.solve(y);
  for (std::size_t a = 0; a < support.size(); ++a) out.set(support[a], coef[static_cast<Eigen::Index>(a)]);
  return out;
}

SparseCoefficients prune_backward(const Matrix& z, const Vector& y, const SparseCoefficients& beta,
                                  std::size_t k) {
  if (y.size() != z.rows()) fail(ErrorCode::dimension_mismatch, "response length does not match design rows");
  std::vector<std::size_t> support = beta.support();
  if (k >= support.size()) {
    fail(ErrorCode::target_too_large, "target size " + std::to_string(k) +
                                          " is not below the support size " + std::to_string(support.size()));
  }
  require(k >= 1, "backward selection needs a target size of at least 1");
  const double inv_n = 1.0 / static_cast<double>(z.rows());

  while (support.size() > k) {
    const Matrix zs = gather(z, support);
    check_rank(zs, support);
    const Matrix gram = zs.transpose() * zs * inv_n;
    Eigen::LDLT<Matrix> ldlt(gram);
    const Vector coef = ldlt.solve(zs.transpose() * y * inv_n);
    const Matrix inv = ldlt.solve(Matrix::Identity(gram.rows(), gram.cols()));

    // Dropping j from the least-squares fit on S raises the empirical RSS by
    // coef_j^2 / (G^-1)_jj.
    std::size_t worst = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < support.size(); ++a) {
      const auto ai = static_cast<Eigen::Index>(a);
      const double increase = coef[ai] * coef[ai] / inv(ai, ai);
      if (increase <= best + 1e-14 * std::max(1.0, std::abs(best))) {
        best = std::min(best, increase);
        worst = a;
      }
    }
    support.erase(support.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  return least_squares_on(z, y, support);
}

SparseCoefficients prune_backward(const DesignMatrix& z, const ResponseVector& y,
                                  const SparseCoefficients& beta, std::size_t k) {
  return prune_backward(z.values(), y.values, beta, k);
}

BoundCheck verify_theorem1_bound(const Matrix& z, const Vector& f, const SparseCoefficients& beta,
                                 std::size_t k) {
  const std::size_t kt = beta.support_size();
  if (kt < 3) fail(ErrorCode::support_too_small, "bound check needs at least 3 nonzeros");
  if (kt > 8) fail(ErrorCode::enumeration_too_large, "enumeration limited to supports of size <= 8");
  if (k >= kt) fail(ErrorCode::target_too_large, "target size must be below the support size");
  require(k >= 2, "bound check needs a target size of at least 2");
  if (f.size() != z.rows()) fail(ErrorCode::dimension_mismatch, "f length does not match design rows");

  BoundCheck out;
  out.expected_beta = Vector::Zero(static_cast<Eigen::Index>(beta.dimension()));
  std::function<void(const SparseCoefficients&, double)> walk = [&](const SparseCoefficients& b, double weight) {
    if (b.support_size() == k) {
      out.exact_expected_loss += weight * prediction_loss(z, b, f);
      out.expected_beta += weight * b.to_dense();
      return;
    }
    const auto dist = randomization_probs(b);
    for (const auto& [j, q] : dist.drop_probs) {
      if (q > 0.0) walk(drop_one_at(b, dist, j), weight * q);
    }
  };
  walk(beta, 1.0);

  const double l1 = beta.l1_norm();
  out.bound = prediction_loss(z, beta, f) +
              l1 * l1 * (1.0 / static_cast<double>(k - 1) - 1.0 / static_cast<double>(kt - 1));
  return out;
}

MaureyCheck verify_maurey_bound(const Matrix& z, const Vector& f, const SparseCoefficients& beta,
                                std::size_t k) {
  const std::size_t m = beta.support_size();
  if (m < 1) fail(ErrorCode::support_too_small, "maurey check needs a nonzero coordinate");
  require(k >= 1, "maurey check needs at least one draw");
  if (std::pow(static_cast<double>(m), static_cast<double>(k)) > 1e6) {
    fail(ErrorCode::enumeration_too_large, "|I|^K exceeds 1e6");
  }
  if (f.size() != z.rows()) fail(ErrorCode::dimension_mismatch, "f length does not match design rows");

  const auto support = beta.support();
  const double l1 = beta.l1_norm();
  std::vector<double> pi(m);
  for (std::size_t a = 0; a < m; ++a) pi[a] = std::abs(beta.get(support[a])) / l1;

  const auto p = static_cast<Eigen::Index>(beta.dimension());
  const Vector dense = beta.to_dense();
  MaureyCheck out;
  out.expected_beta = Vector::Zero(p);
  Matrix cov = Matrix::Zero(p, p);

  // Multinomial compositions of k draws over the support.
  std::vector<std::size_t> cnt(m, 0);
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t a, std::size_t left, double weight) {
    if (a + 1 == m) {
      cnt[a] = left;
      const double w = weight * std::pow(pi[a], static_cast<double>(left));
      std::map<std::size_t, std::size_t> counts;
      for (std::size_t i = 0; i < m; ++i) counts[support[i]] = cnt[i];
      const auto est = maurey_from_counts(beta, counts);
      const Vector dev = est.to_dense() - dense;
      out.exact_expected_loss += w * prediction_loss(z, est, f);
      out.expected_beta += w * est.to_dense();
      cov += w * dev * dev.transpose();
      return;
    }
    // choose(left, c) * pi^c, built incrementally
    double binom = 1.0;
    for (std::size_t c = 0; c <= left; ++c) {
      if (c > 0) binom = binom * static_cast<double>(left - c + 1) / static_cast<double>(c);
      cnt[a] = c;
      walk(a + 1, left - c, weight * binom * std::pow(pi[a], static_cast<double>(c)));
    }
  };
  walk(0, k, 1.0);

  const Vector mag = dense.cwiseAbs();
  const Matrix closed = (l1 / static_cast<double>(k)) * Matrix(mag.asDiagonal()) -
                        (1.0 / static_cast<double>(k)) * dense * dense.transpose();
  out.covariance_error = (cov - closed).cwiseAbs().maxCoeff();
  out.bound = prediction_loss(z, beta, f) + l1 * l1 / static_cast<double>(k);
  return out;
}

SingleStepMoments single_step_moments(const Matrix& z, const Vector& f, const SparseCoefficients& beta) {
  if (f.size() != z.rows()) fail(ErrorCode::dimension_mismatch, "f length does not match design rows");
  const auto dist = randomization_probs(beta);
  const auto p = static_cast<Eigen::Index>(beta.dimension());
  const double n = static_cast<double>(z.rows());

  SingleStepMoments out;
  out.expected_beta = Vector::Zero(p);
  for (const auto& [j, q] : dist.drop_probs) {
    if (q <= 0.0) continue;
    const auto b = drop_one_at(beta, dist, j);
    out.expected_loss += q * prediction_loss(z, b, f);
    out.expected_beta += q * b.to_dense();
  }

  // Sigma* = D + diag(v^2) - v v' with D = diag(b_j^2 (1-p_j)/p_j) and
  // v = B b, B = diag((1-p_j)/p_j).
  Vector d = Vector::Zero(p);
  Vector v = Vector::Zero(p);
  for (const auto& [j, pj] : dist.probs) {
    const double bj = beta.get(j);
    const double ratio = dist.drop_probs.at(j) / pj;
    d[static_cast<Eigen::Index>(j)] = bj * bj * ratio;
    v[static_cast<Eigen::Index>(j)] = ratio * bj;
  }
  out.covariance_reduced = Matrix(d.asDiagonal()) - v * v.transpose();
  out.covariance = out.covariance_reduced + Matrix(v.cwiseAbs2().asDiagonal());

  const Matrix gram = z.transpose() * z;
  const double base = prediction_loss(z, beta, f);
  out.variance_identity = base + (gram * out.covariance).trace() / n;
  out.variance_identity_reduced = base + (gram * out.covariance_reduced).trace() / n;
  const double kt1 = static_cast<double>(beta.support_size() - 1);
  out.step_bound = base + beta.l1_norm() * beta.l1_norm() / (kt1 * kt1);
  return out;
}

}  // namespace hsel
