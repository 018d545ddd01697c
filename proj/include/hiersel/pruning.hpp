#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "hiersel/model_core.hpp"
#include "hiersel/random.hpp"

namespace hsel {

// Drop-one randomization over the support I of an estimator:
//   p_i = min{1, c (K - 1) |b_i| / ||b||_1},  sum_i p_i = K - 1,  c >= 1,
// so {1 - p_i} is a probability distribution on I.
struct RandomizationDistribution {
  std::map<std::size_t, double> probs;
  std::map<std::size_t, double> drop_probs;  // 1 - p_i, computed without cancellation
  double c = 1.0;
  double source_l1 = 0.0;
};

RandomizationDistribution randomization_probs(const SparseCoefficients& beta);

/// Zeroes `dropped` and divides every other coordinate by its p_i.
SparseCoefficients drop_one_at(const SparseCoefficients& beta, const RandomizationDistribution& dist,
                               std::size_t dropped);

struct DropResult {
  SparseCoefficients beta;
  std::size_t dropped = 0;
};

DropResult drop_one(const SparseCoefficients& beta, const RandomizationDistribution& dist, Rng& rng);

struct PruneStep {
  std::size_t dropped = 0;
  RandomizationDistribution distribution;
  double l1_before = 0.0;
  double l1_after = 0.0;
  SparseCoefficients result;
};

struct PruneTrace {
  std::vector<PruneStep> steps;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

struct RandomizedPrune {
  SparseCoefficients beta;
  PruneTrace trace;
};

/// K~ - K independent drop-one steps, recomputing the distribution each time.
/// Requires 2 <= K < K~.
RandomizedPrune prune_randomized(const SparseCoefficients& beta, std::size_t k, Rng& rng);

/// Maurey estimator from draw counts: coordinate j becomes
/// sign(b_j) ||b||_1 counts_j / K, with K = sum of counts.
SparseCoefficients maurey_from_counts(const SparseCoefficients& beta,
                                      const std::map<std::size_t, std::size_t>& counts);

/// K i.i.d. draws from {|b_i| / ||b||_1}.
SparseCoefficients prune_maurey(const SparseCoefficients& beta, std::size_t k, Rng& rng);

/// Backward selection: K~ - K times, drop the support index whose removal
/// leaves the smallest least-squares RSS (higher index on ties). Returns the
/// least-squares fit on the K survivors.
SparseCoefficients prune_backward(const DesignMatrix& z, const ResponseVector& y,
                                  const SparseCoefficients& beta, std::size_t k);
SparseCoefficients prune_backward(const Matrix& z, const Vector& y, const SparseCoefficients& beta,
                                  std::size_t k);

/// Least-squares coefficients on a fixed support (empirical-norm RSS).
SparseCoefficients least_squares_on(const Matrix& z, const Vector& y,
                                    const std::vector<std::size_t>& support);

struct BoundCheck {
  double exact_expected_loss = 0.0;
  double bound = 0.0;
  Vector expected_beta;  // E*(beta-hat), dense
  bool holds(double tol = 1e-10) const { return exact_expected_loss <= bound + tol; }
};

/// Exact E*||f - Z beta-hat||^2 of prune_randomized by enumerating every drop
/// sequence, against ||f - Z b||^2 + ||b||_1^2 (1/(K-1) - 1/(K~-1)).
/// Requires 3 <= K~ <= 8 and 2 <= K < K~.
BoundCheck verify_theorem1_bound(const Matrix& z, const Vector& f, const SparseCoefficients& beta,
                                 std::size_t k);

struct MaureyCheck : BoundCheck {
  // max |enumerated covariance - closed form| over all entries
  double covariance_error = 0.0;
};

/// Exact E*||f - Z beta_M||^2 by multinomial enumeration (|I|^K <= 1e6),
/// against ||f - Z b||^2 + ||b||_1^2 / K; also checks the covariance
///   (||b||_1 / K) diag|b| - (1/K) b b',
/// which reduces to the |b||b|' form when all coordinates share a sign.
MaureyCheck verify_maurey_bound(const Matrix& z, const Vector& f, const SparseCoefficients& beta,
                                std::size_t k);

// Moments of one drop-one step.
//
// `covariance` is the exact randomization covariance
//   Sigma* = diag(b_j^2 (1-p_j)/p_j) + diag(v_j^2) - v v',  v = B b,
//   B = diag((1-p_j)/p_j),
// and `covariance_reduced` omits the diag(v_j^2) term. Only the exact form
// satisfies E*||f - Z beta*||^2 = ||f - Z b||^2 + n^-1 trace(Z'Z Sigma*).
struct SingleStepMoments {
  double expected_loss = 0.0;              // enumerated E*||f - Z beta*||^2
  double variance_identity = 0.0;          // ||f - Z b||^2 + n^-1 trace(Z'Z Sigma*)
  double variance_identity_reduced = 0.0;  // same with covariance_reduced
  double step_bound = 0.0;                 // ||f - Z b||^2 + ||b||_1^2 / (K~-1)^2
  Vector expected_beta;                    // enumerated E*(beta*)
  Matrix covariance;
  Matrix covariance_reduced;
};

SingleStepMoments single_step_moments(const Matrix& z, const Vector& f, const SparseCoefficients& beta);

}  // namespace hsel
