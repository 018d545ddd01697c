#include "hiersel/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hiersel/data_io.hpp"
#include "hiersel/lasso_path.hpp"
#include "hiersel/pruning.hpp"

namespace hsel {

std::string to_string(PruneStrategy s) {
  switch (s) {
    case PruneStrategy::backward: return "backward";
    case PruneStrategy::randomized: return "randomized";
    case PruneStrategy::maurey: return "maurey";
  }
  return "backward";
}

PruneStrategy prune_strategy_from_string(const std::string& s) {
  if (s == "backward") return PruneStrategy::backward;
  if (s == "randomized") return PruneStrategy::randomized;
  if (s == "maurey") return PruneStrategy::maurey;
  fail(ErrorCode::invalid_argument, "unknown prune strategy '" + s + "'");
}

std::string to_string(CollinearScope s) {
  return s == CollinearScope::global ? "global" : "ancestral";
}

CollinearScope collinear_scope_from_string(const std::string& s) {
  if (s == "global") return CollinearScope::global;
  if (s == "ancestral") return CollinearScope::ancestral;
  fail(ErrorCode::invalid_argument, "unknown collinearity scope '" + s + "'");
}

void HierarchyConfig::validate() const {
  require(k >= 2, "K must be at least 2");
  require(k < k_tilde, "K must be smaller than K~");
  require(max_iterations >= 1, "max_iterations must be at least 1");
  require(split_fraction > 0.0 && split_fraction <= 1.0, "split fraction must lie in (0, 1]");
  require(r2_epsilon >= 0.0, "R^2 epsilon must be nonnegative");
  require(collinear_tol > 0.0, "collinearity tolerance must be positive");
  if (basis == BasisKind::step) {
    require(functions_per_variable >= 1, "L must be at least 1");
  } else if (basis == BasisKind::ramp) {
    require(ramp_spacing > 0.0 && ramp_spacing < 1.0, "ramp spacing must lie in (0, 1)");
  } else {
    fail(ErrorCode::invalid_argument, "the hierarchy supports step and ramp bases");
  }
}

std::size_t HierarchyConfig::base_dictionary_size(std::size_t d) const {
  return basis == BasisKind::step ? make_step_basis(d, functions_per_variable).size()
                                  : make_ramp_basis(d, ramp_spacing).size();
}

SampleSplit split_sample(std::size_t n, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, "split fraction must lie in (0, 1]");
  SampleSplit s;
  if (fraction == 1.0) {
    s.selection.resize(n);
    std::iota(s.selection.begin(), s.selection.end(), std::size_t{0});
    s.estimation = s.selection;
    return s;
  }
  const auto perm = seeded_permutation(n, seed, 1);
  const auto n_sel = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  s.selection.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_sel));
  s.estimation.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_sel), perm.end());
  std::sort(s.selection.begin(), s.selection.end());
  std::sort(s.estimation.begin(), s.estimation.end());
  return s;
}

namespace {

Matrix rows_of(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

Vector rows_of(const Vector& y, const std::vector<std::size_t>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<Eigen::Index>(r)] = y[static_cast<Eigen::Index>(idx[r])];
  return out;
}

Matrix columns_of(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(idx[c]));
  return out;
}

// Rank-tolerant least squares.
Vector solve_ls(const Matrix& a, const Vector& y) {
  if (a.cols() == 0) return Vector();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  cod.setThreshold(1e-10);
  return cod.solve(y);
}

}  // namespace

double r_squared(const Vector& y, const Vector& fitted) {
  const double mean = y.mean();
  const double tss = (y.array() - mean).square().sum();
  if (tss == 0.0) return 0.0;
  return 1.0 - (y - fitted).squaredNorm() / tss;
}

double pearson_correlation(const Vector& a, const Vector& b) {
  require(a.size() == b.size() && a.size() >= 2, "correlation needs two equal-length vectors");
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  const double denom = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
  return denom > 0.0 ? ac.dot(bc) / denom : 0.0;
}

MsKResult ms_k(const Dictionary& dict, const Matrix& evaluated, const Vector& y,
               const HierarchyConfig& config, Rng& rng) {
  if (static_cast<std::size_t>(evaluated.cols()) != dict.size() || evaluated.rows() != y.size()) {
    fail(ErrorCode::dimension_mismatch, "ms_k: evaluated matrix does not match dictionary or response");
  }
  if (dict.size() == 0) fail(ErrorCode::dictionary_too_small, "ms_k: empty dictionary");

  // Centering gives the model an unpenalized intercept.
  const Centered xc = center_columns(evaluated);
  const Vector yc = y.array() - y.mean();
  const DesignMatrix z = normalize_columns(xc.values);
  const std::size_t p = dict.size();

  MsKResult out;
  SparseCoefficients fitted(p);
  std::vector<std::size_t> first_knot(p, 0);
  if (p <= config.k) {
    const Vector coef = solve_ls(z.values(), yc);
    for (std::size_t j = 0; j < p; ++j) fitted.set(j, coef[static_cast<Eigen::Index>(j)]);
    out.lasso_size = p;
  } else {
    const auto path = lars_path(z, ResponseVector{yc}, std::min(config.k_tilde, p));
    out.path_stalled = path.stalled;
    std::fill(first_knot.begin(), first_knot.end(), path.breakpoints.size());
    for (std::size_t k = path.breakpoints.size(); k-- > 0;) {
      for (auto j : path.breakpoints[k].active_set) first_knot[j] = k;
    }
    const SparseCoefficients lasso = path.last().beta;
    out.lasso_size = lasso.support_size();
    if (lasso.support_size() <= config.k) {
      fitted = lasso;
    } else {
      switch (config.prune) {
        case PruneStrategy::backward:
          fitted = prune_backward(z, ResponseVector{yc}, lasso, config.k);
          break;
        case PruneStrategy::randomized:
          fitted = prune_randomized(lasso, config.k, rng).beta;
          break;
        case PruneStrategy::maurey:
          fitted = prune_maurey(lasso, config.k, rng);
          break;
      }
    }
  }

  std::vector<std::size_t> order = fitted.support();
  if (p <= config.k) {
    order.resize(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(fitted.get(a)) > std::abs(fitted.get(b));
  });
  out.selected_columns = order;
  for (auto j : order) out.selected.push_back(dict.features[j]);
  std::vector<std::size_t> by_entry = order;
  std::stable_sort(by_entry.begin(), by_entry.end(), [&](std::size_t a, std::size_t b) {
    return first_knot[a] != first_knot[b] ? first_knot[a] < first_knot[b] : a < b;
  });
  for (auto j : by_entry) out.entry_order.push_back(dict.features[j]);
  out.fitted = std::move(fitted);

  const Matrix zs = columns_of(z.values(), order);
  const Vector refit = order.empty() ? Vector::Zero(yc.size()) : Vector(zs * solve_ls(zs, yc));
  out.r2 = r_squared(yc, refit);
  return out;
}

Vector FinalModel::predict(const Matrix& unit_data) const {
  Vector out = Vector::Constant(unit_data.rows(), intercept);
  if (descriptors.empty()) return out;
  const Matrix e = evaluate(descriptors, unit_data);
  for (std::size_t t = 0; t < descriptors.size(); ++t) out += coefficients[t] * e.col(static_cast<Eigen::Index>(t));
  return out;
}

FinalModel refit_model(const std::vector<FeatureDescriptor>& descriptors, const Matrix& unit_data,
                       const Vector& y) {
  require(unit_data.rows() == y.size() && y.size() >= 1, "refit: data and response disagree");
  FinalModel model;
  model.descriptors = descriptors;
  const Eigen::Index k = static_cast<Eigen::Index>(descriptors.size());
  Matrix a(unit_data.rows(), k + 1);
  a.col(0).setOnes();
  if (k > 0) a.rightCols(k) = evaluate(descriptors, unit_data);
  const Vector coef = solve_ls(a, y);
  model.intercept = coef[0];
  model.coefficients.assign(coef.data() + 1, coef.data() + coef.size());
  return model;
}

HierarchyResult run_hierarchy(const Matrix& unit_data, const Vector& y, const HierarchyConfig& config) {
  config.validate();
  if (unit_data.rows() != y.size()) fail(ErrorCode::dimension_mismatch, "predictor rows and response length differ");
  const auto n = static_cast<std::size_t>(unit_data.rows());
  const auto d = static_cast<std::size_t>(unit_data.cols());
  require(d >= 1, "need at least one predictor");
  require(n > config.k, "sample size must exceed K");

  HierarchyResult result;
  result.split = split_sample(n, config.split_fraction, config.seed);
  require(result.split.selection.size() > config.k, "selection sample must exceed K");
  const Matrix x_sel = rows_of(unit_data, result.split.selection);
  const Vector y_sel = rows_of(y, result.split.selection);

  Dictionary dict = config.basis == BasisKind::step ? make_step_basis(d, config.functions_per_variable)
                                                    : make_ramp_basis(d, config.ramp_spacing);
  Matrix evaluated = evaluate(dict, x_sel);
  CollinearOptions screen{config.collinear_tol, config.collinear_scope, 0};
  {
    const auto keep = collinear_keep_indices(dict.features, evaluated, screen);
    Dictionary kept;
    for (auto t : keep) kept.features.push_back(dict.features[t]);
    dict = std::move(kept);
    evaluated = columns_of(evaluated, keep);
  }

  auto& state = result.state;
  double best_r2 = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m <= config.max_iterations; ++m) {
    Rng rng(config.seed, 100 + m);
    const MsKResult sel = ms_k(dict, evaluated, y_sel, config, rng);

    IterationReport rep;
    rep.m = m;
    rep.dictionary_size = dict.size();
    rep.generation = dict.generation;
    rep.selected = sel.selected;
    rep.entry_order = sel.entry_order;
    for (auto j : sel.selected_columns) rep.coefficients.push_back(sel.fitted.get(j));
    rep.r2 = sel.r2;
    rep.l1 = sel.fitted.l1_norm();
    rep.lasso_size = sel.lasso_size;
    result.iterations.push_back(rep);

    state.dictionary = dict;
    state.r2_history.push_back(sel.r2);
    state.m = m;
    if (sel.r2 > best_r2) {
      best_r2 = sel.r2;
      result.best_iteration = m;
      state.selected = sel.selected;
    }

    if (m > 1 && sel.r2 <= result.iterations[m - 2].r2 + config.r2_epsilon) {
      result.converged = true;
      break;
    }
    if (m == config.max_iterations) break;

    Dictionary next = expand_interactions(sel.selected, dict);
    if (next.size() == dict.size()) {
      result.converged = true;
      break;
    }
    const std::vector<FeatureDescriptor> fresh(next.features.begin() + static_cast<std::ptrdiff_t>(dict.size()),
                                               next.features.end());
    Matrix grown(evaluated.rows(), static_cast<Eigen::Index>(next.size()));
    grown.leftCols(evaluated.cols()) = evaluated;
    grown.rightCols(static_cast<Eigen::Index>(fresh.size())) = evaluate(fresh, x_sel);

    CollinearOptions incremental = screen;
    incremental.trusted_prefix = dict.size();
    const auto keep = collinear_keep_indices(next.features, grown, incremental);

    Dictionary kept;
    kept.generation = next.generation;
    for (auto t : keep) {
      kept.features.push_back(next.features[t]);
      if (t < dict.size()) continue;
      // Record which selected pair produced the new term.
      const auto& child = next.features[t];
      for (std::size_t a = 0; a < sel.selected.size(); ++a) {
        bool found = false;
        for (std::size_t b = a + 1; b < sel.selected.size() && !found; ++b) {
          auto prod = sel.selected[a].times(sel.selected[b]);
          if (prod && *prod == child) {
            result.lineage.push_back({child, sel.selected[a], sel.selected[b], m});
            found = true;
          }
        }
        if (found) break;
      }
    }
    dict = std::move(kept);
    evaluated = columns_of(grown, keep);
  }

  const Matrix x_est = rows_of(unit_data, result.split.estimation);
  const Vector y_est = rows_of(y, result.split.estimation);
  result.model = refit_model(state.selected, x_est, y_est);
  return result;
}

}  // namespace hsel
