#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hiersel/model_core.hpp"

namespace hsel {

enum class BasisKind { step, ramp, interval };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& s);

// One univariate factor. Variables are numbered 1..d.
//   step:     1(x > lo)
//   ramp:     (x - lo) 1(x > lo)
//   interval: 1(lo < x <= hi)
struct Factor {
  std::size_t var = 1;
  BasisKind kind = BasisKind::step;
  double lo = 0.0;
  double hi = 0.0;

  double operator()(double x) const;

  auto operator<=>(const Factor&) const = default;
  bool operator==(const Factor&) const = default;
};

/// A dictionary function: the product of its factors, each on a distinct
/// variable. Factors are kept sorted by (var, kind, parameter).
class FeatureDescriptor {
 public:
  FeatureDescriptor() = default;
  explicit FeatureDescriptor(std::vector<Factor> factors);

  const std::vector<Factor>& factors() const noexcept { return factors_; }
  std::size_t order() const noexcept { return factors_.size(); }

  /// Variable set the function depends on, ascending.
  std::vector<std::size_t> variables() const;
  bool shares_variable(const FeatureDescriptor& other) const;

  /// Product fg, or nullopt when the variable sets intersect.
  std::optional<FeatureDescriptor> times(const FeatureDescriptor& other) const;

  double evaluate(const double* row, std::size_t d) const;

  /// Short label such as "1_4" or "2_3x4_1(ramp 0.5)".
  std::string label() const;

  auto operator<=>(const FeatureDescriptor&) const = default;
  bool operator==(const FeatureDescriptor&) const = default;

 private:
  std::vector<Factor> factors_;
};

struct Dictionary {
  std::vector<FeatureDescriptor> features;
  std::size_t generation = 0;

  std::size_t size() const noexcept { return features.size(); }
  bool contains(const FeatureDescriptor& f) const;
};

/// F0 of L step functions 1(x > k/(L+1)), k = 1..L, per variable.
Dictionary make_step_basis(std::size_t d, std::size_t functions_per_variable);

/// Ramp functions (x - a)1(x > a) for every grid point a = k * spacing in [0, 1).
Dictionary make_ramp_basis(std::size_t d, double grid_spacing);

/// F_m = F_{m-1} plus every product of two selected terms whose variable
/// sets are disjoint. Products already present are not duplicated.
Dictionary expand_interactions(const std::vector<FeatureDescriptor>& selected,
                               const Dictionary& current);

/// Column t holds features[t] evaluated on each row of raw_data, which must
/// lie in [0,1]^d (1e-9 slack).
Matrix evaluate(const Dictionary& dict, const Matrix& raw_data);
Matrix evaluate(const std::vector<FeatureDescriptor>& features, const Matrix& raw_data);

enum class CollinearScope {
  // Residual against the intercept and every earlier kept column.
  global,
  // Residual against the intercept and the earlier kept columns whose
  // variable sets are contained in the candidate's.
  ancestral,
};

struct CollinearOptions {
  double tol = 1e-8;
  CollinearScope scope = CollinearScope::global;
  // Leading columns that are kept without testing (already screened).
  std::size_t trusted_prefix = 0;
};

/// Left-to-right greedy scan; returns the indices of kept columns. A column is
/// dropped when the RMS of its residual is below tol times its own RMS.
std::vector<std::size_t> collinear_keep_indices(const std::vector<FeatureDescriptor>& features,
                                                const Matrix& evaluated,
                                                const CollinearOptions& options = {});

Dictionary prune_collinear(const Dictionary& dict, const Matrix& evaluated, double tol = 1e-8);

}  // namespace hsel
