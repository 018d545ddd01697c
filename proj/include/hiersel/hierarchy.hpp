#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hiersel/basis_dictionary.hpp"
#include "hiersel/model_core.hpp"
#include "hiersel/random.hpp"

namespace hsel {

enum class PruneStrategy { backward, randomized, maurey };

std::string to_string(PruneStrategy s);
PruneStrategy prune_strategy_from_string(const std::string& s);
std::string to_string(CollinearScope s);
CollinearScope collinear_scope_from_string(const std::string& s);

struct HierarchyConfig {
  BasisKind basis = BasisKind::step;
  std::size_t functions_per_variable = 32;  // L, step basis
  double ramp_spacing = 1.0 / 32.0;         // ramp basis grid
  std::size_t k_tilde = 40;
  std::size_t k = 20;
  std::size_t max_iterations = 10;
  // Stop once R^2 fails to beat the previous iteration by more than this.
  double r2_epsilon = 1e-4;
  PruneStrategy prune = PruneStrategy::backward;
  // Share of the sample used for selection; the rest refits the final model.
  double split_fraction = 1.0;
  std::uint64_t seed = 0;
  double collinear_tol = 1e-8;
  CollinearScope collinear_scope = CollinearScope::ancestral;

  void validate() const;
  /// Size of F0 before collinearity screening (the L d term of the growth bound).
  std::size_t base_dictionary_size(std::size_t d) const;
};

struct SampleSplit {
  std::vector<std::size_t> selection;
  std::vector<std::size_t> estimation;
};

/// Random disjoint partition with round(fraction n) selection rows; fraction 1
/// puts every row in both sets.
SampleSplit split_sample(std::size_t n, double fraction, std::uint64_t seed);

struct MsKResult {
  std::vector<FeatureDescriptor> selected;   // ordered by |coefficient|, largest first
  std::vector<std::size_t> selected_columns; // indices into the dictionary
  std::vector<FeatureDescriptor> entry_order; // `selected` by first entry into the LASSO path
  SparseCoefficients fitted;                 // on the standardized columns
  double r2 = 0.0;
  std::size_t lasso_size = 0;                // nonzeros at the LASSO stop
  bool path_stalled = false;
};

/// LASSO path to K~ nonzeros on the centered, standardized columns, then the
/// configured pruning down to K. R^2 is that of the least-squares refit on
/// the selected columns (with intercept) over the given sample.
MsKResult ms_k(const Dictionary& dict, const Matrix& evaluated, const Vector& y,
               const HierarchyConfig& config, Rng& rng);

struct Lineage {
  FeatureDescriptor child;
  FeatureDescriptor parent_a;
  FeatureDescriptor parent_b;
  std::size_t iteration = 0;  // iteration whose selection produced the parents
};

struct HierarchyState {
  Dictionary dictionary;
  std::vector<FeatureDescriptor> selected;
  std::vector<double> r2_history;
  std::size_t m = 0;
};

struct IterationReport {
  std::size_t m = 0;
  std::size_t dictionary_size = 0;
  std::size_t generation = 0;
  std::vector<FeatureDescriptor> selected;
  std::vector<double> coefficients;  // standardized scale, aligned with `selected`
  std::vector<FeatureDescriptor> entry_order;
  double r2 = 0.0;
  double l1 = 0.0;
  std::size_t lasso_size = 0;
};

struct FinalModel {
  std::vector<FeatureDescriptor> descriptors;
  std::vector<double> coefficients;  // on the evaluated (unstandardized) features
  double intercept = 0.0;

  /// Predictions for rows already mapped to [0,1]^d.
  Vector predict(const Matrix& unit_data) const;
};

struct HierarchyResult {
  HierarchyState state;
  FinalModel model;
  std::vector<IterationReport> iterations;
  std::vector<Lineage> lineage;
  std::size_t best_iteration = 0;  // 1-based
  bool converged = false;
  SampleSplit split;
};

/// Hierarchical selection on predictors already mapped to [0,1]^d.
HierarchyResult run_hierarchy(const Matrix& unit_data, const Vector& y, const HierarchyConfig& config);

/// Least-squares fit of y on the given columns plus an intercept.
FinalModel refit_model(const std::vector<FeatureDescriptor>& descriptors, const Matrix& unit_data,
                       const Vector& y);

double pearson_correlation(const Vector& a, const Vector& b);
double r_squared(const Vector& y, const Vector& fitted);

}  // namespace hsel
