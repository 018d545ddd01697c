#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hiersel/model_core.hpp"

namespace hsel {

struct ColumnRange {
  double min = 0.0;
  double max = 1.0;
};

// Predictors are stored raw; `normalization` maps column j affinely onto
// [0,1] through its (min, max).
struct TabularDataset {
  Matrix predictors;
  Vector response;
  std::vector<std::string> column_names;
  std::string response_name = "y";
  std::vector<ColumnRange> normalization;
  std::vector<std::string> warnings;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(predictors.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(predictors.cols()); }

  /// Predictors mapped to [0,1] with the stored ranges, clipped.
  Matrix normalized() const;
  /// Inverse of the normalization map (no clipping).
  Matrix denormalize(const Matrix& unit) const;

  TabularDataset subset(const std::vector<std::size_t>& rows) const;
};

/// (min, max) of every column over all rows.
std::vector<ColumnRange> observed_ranges(const Matrix& x);

enum class SyntheticKind { linear_gaussian, step_interaction };

// Reading of the linear-design coefficient formula 10 / (25 + g(j)).
enum class CoefficientFormula { j_squared, two_j };

struct SyntheticTruth {
  SyntheticKind kind = SyntheticKind::linear_gaussian;
  std::vector<double> true_coefficients;
  double noise_sd = 0.0;
  double rho = 0.0;
  // Population R^2 for step_interaction, 0 otherwise.
  double population_r2 = 0.0;
  std::function<Vector(const Matrix&)> true_predictor;
};

struct SyntheticData {
  TabularDataset dataset;
  SyntheticTruth truth;
};

/// Equicorrelated N(0,1) predictors Z_j = sqrt(rho) W + sqrt(1-rho) V_j with
/// Y = sum_{j <= active} 10/(25+j^2) Z_j + N(0, sigma^2).
SyntheticData simulate_linear_gaussian(std::size_t n, std::size_t p, std::size_t active, double sigma,
                                       double rho, std::uint64_t seed,
                                       CoefficientFormula formula = CoefficientFormula::j_squared);

/// Ten uniform predictors with
///   Y = b1 1(1/8 < X1 <= 1/4)
///     + b2 1(1/8 < X2 <= 1/2) 1(1/8 < X3 <= 3/8) 1(1/8 <= X4 <= 5/8) + eps,
/// b1 = 1, sd(term 2) = 3 sd(term 1), and noise set for population R^2 = 0.9.
SyntheticData simulate_step_interaction(std::size_t n, std::uint64_t seed);

struct StepInteractionCoefficients {
  double beta1 = 1.0;
  double beta2 = 0.0;
  double noise_sd = 0.0;
};
StepInteractionCoefficients step_interaction_coefficients();

/// Reads a headed CSV. Non-numeric predictor columns are one-hot encoded
/// (levels sorted), constant columns dropped, rows with empty fields
/// rejected; each of these leaves a warning.
TabularDataset load_csv(const std::string& path, const std::string& response_column);
TabularDataset parse_csv(const std::string& text, const std::string& response_column);

/// Writes predictors (raw) and the response as a headed CSV.
void write_csv(const TabularDataset& data, const std::string& path);
std::string format_csv(const TabularDataset& data);

struct Split {
  TabularDataset train;
  TabularDataset test;
};

/// Random disjoint split; both halves carry the training (min, max) ranges.
Split train_test_split(const TabularDataset& data, std::size_t n_train, std::uint64_t seed);

/// Uniformly random permutation of 0..n-1 from the seed.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed, std::uint64_t stream);

}  // namespace hsel
