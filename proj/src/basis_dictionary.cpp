#include "hiersel/basis_dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace hsel {

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::step: return "step";
    case BasisKind::ramp: return "ramp";
    case BasisKind::interval: return "interval";
  }
  return "step";
}

BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "step") return BasisKind::step;
  if (s == "ramp") return BasisKind::ramp;
  if (s == "interval" || s == "indicator-interval") return BasisKind::interval;
  fail(ErrorCode::parse_error, "unknown basis kind '" + s + "'");
}

double Factor::operator()(double x) const {
  switch (kind) {
    case BasisKind::step: return x > lo ? 1.0 : 0.0;
    case BasisKind::ramp: return x > lo ? x - lo : 0.0;
    case BasisKind::interval: return (x > lo && x <= hi) ? 1.0 : 0.0;
  }
  return 0.0;
}

FeatureDescriptor::FeatureDescriptor(std::vector<Factor> factors) : factors_(std::move(factors)) {
  require(!factors_.empty(), "feature descriptor needs at least one factor");
  std::sort(factors_.begin(), factors_.end());
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    require(factors_[i].var >= 1, "variable indices start at 1");
    if (i > 0 && factors_[i].var == factors_[i - 1].var) {
      fail(ErrorCode::invalid_argument, "factors of a descriptor must use distinct variables");
    }
  }
}

std::vector<std::size_t> FeatureDescriptor::variables() const {
  std::vector<std::size_t> v;
  v.reserve(factors_.size());
  for (const auto& f : factors_) v.push_back(f.var);
  return v;
}

bool FeatureDescriptor::shares_variable(const FeatureDescriptor& other) const {
  auto a = factors_.begin();
  auto b = other.factors_.begin();
  while (a != factors_.end() && b != other.factors_.end()) {
    if (a->var == b->var) return true;
    if (a->var < b->var) {
      ++a;
    } else {
      ++b;
    }
  }
  return false;
}

std::optional<FeatureDescriptor> FeatureDescriptor::times(const FeatureDescriptor& other) const {
  if (shares_variable(other)) return std::nullopt;
  std::vector<Factor> merged = factors_;
  merged.insert(merged.end(), other.factors_.begin(), other.factors_.end());
  return FeatureDescriptor(std::move(merged));
}

double FeatureDescriptor::evaluate(const double* row, std::size_t d) const {
  double v = 1.0;
  for (const auto& f : factors_) {
    if (f.var > d) fail(ErrorCode::dimension_mismatch, "descriptor uses variable beyond data width");
    v *= f(row[f.var - 1]);
    if (v == 0.0) break;
  }
  return v;
}

std::string FeatureDescriptor::label() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const auto& f = factors_[i];
    if (i > 0) os << 'x';
    os << f.var << '_';
    switch (f.kind) {
      case BasisKind::step: os << "step(" << f.lo << ')'; break;
      case BasisKind::ramp: os << "ramp(" << f.lo << ')'; break;
      case BasisKind::interval: os << "int(" << f.lo << ',' << f.hi << ')'; break;
    }
  }
  return os.str();
}

bool Dictionary::contains(const FeatureDescriptor& f) const {
  return std::find(features.begin(), features.end(), f) != features.end();
}

Dictionary make_step_basis(std::size_t d, std::size_t functions_per_variable) {
  if (d < 1 || functions_per_variable < 1) {
    fail(ErrorCode::invalid_argument, "step basis needs d >= 1 and L >= 1");
  }
  const double denom = static_cast<double>(functions_per_variable + 1);
  Dictionary dict;
  dict.features.reserve(d * functions_per_variable);
  for (std::size_t var = 1; var <= d; ++var) {
    for (std::size_t k = 1; k <= functions_per_variable; ++k) {
      dict.features.emplace_back(
          std::vector<Factor>{{var, BasisKind::step, static_cast<double>(k) / denom, 0.0}});
    }
  }
  return dict;
}

Dictionary make_ramp_basis(std::size_t d, double grid_spacing) {
  if (d < 1 || !(grid_spacing > 0.0 && grid_spacing < 1.0)) {
    fail(ErrorCode::invalid_argument, "ramp basis needs d >= 1 and 0 < spacing < 1");
  }
  // Grid points k * spacing strictly below 1; the slack absorbs rounding in
  // spacings like 1/32.
  const auto points = static_cast<std::size_t>(std::ceil(1.0 / grid_spacing - 1e-9));
  Dictionary dict;
  dict.features.reserve(d * points);
  for (std::size_t var = 1; var <= d; ++var) {
    for (std::size_t k = 0; k < points; ++k) {
      dict.features.emplace_back(
          std::vector<Factor>{{var, BasisKind::ramp, static_cast<double>(k) * grid_spacing, 0.0}});
    }
  }
  return dict;
}

Dictionary expand_interactions(const std::vector<FeatureDescriptor>& selected,
                               const Dictionary& current) {
  std::set<FeatureDescriptor> present(current.features.begin(), current.features.end());
  for (const auto& s : selected) {
    if (!present.count(s)) {
      fail(ErrorCode::invalid_argument, "selected term " + s.label() + " is not in the dictionary");
    }
  }
  Dictionary next = current;
  next.generation = current.generation + 1;
  for (std::size_t a = 0; a < selected.size(); ++a) {
    for (std::size_t b = a + 1; b < selected.size(); ++b) {
      auto prod = selected[a].times(selected[b]);
      if (!prod) continue;
      if (present.insert(*prod).second) next.features.push_back(std::move(*prod));
    }
  }
  return next;
}

Matrix evaluate(const std::vector<FeatureDescriptor>& features, const Matrix& raw_data) {
  constexpr double slack = 1e-9;
  const auto n = raw_data.rows();
  const auto d = static_cast<std::size_t>(raw_data.cols());
  for (Eigen::Index i = 0; i < raw_data.size(); ++i) {
    const double x = raw_data.data()[i];
    if (!(x >= -slack && x <= 1.0 + slack)) {
      fail(ErrorCode::out_of_range, "predictor value outside [0,1]; rescale before evaluating");
    }
  }
  // Row-major copy so each descriptor reads a contiguous row.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = raw_data;
  Matrix out(n, static_cast<Eigen::Index>(features.size()));
  for (std::size_t t = 0; t < features.size(); ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out(i, static_cast<Eigen::Index>(t)) = features[t].evaluate(rows.row(i).data(), d);
    }
  }
  return out;
}

Matrix evaluate(const Dictionary& dict, const Matrix& raw_data) {
  return evaluate(dict.features, raw_data);
}

namespace {

// Incrementally built orthonormal basis.
class OrthoBasis {
 public:
  explicit OrthoBasis(Eigen::Index n) {
    cols_.push_back(Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
  }

  Vector residual(const Vector& x) const {
    Vector r = x;
    // Two passes of classical Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : cols_) r -= q.dot(r) * q;
    }
    return r;
  }

  void append_residual(const Vector& r) {
    const double nrm = r.norm();
    if (nrm > 0.0) cols_.push_back(r / nrm);
  }

  void append(const Vector& x) { append_residual(residual(x)); }

 private:
  std::vector<Vector> cols_;
};

bool is_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

std::vector<std::size_t> collinear_keep_indices(const std::vector<FeatureDescriptor>& features,
                                                const Matrix& evaluated,
                                                const CollinearOptions& options) {
  if (static_cast<std::size_t>(evaluated.cols()) != features.size()) {
    fail(ErrorCode::dimension_mismatch, "evaluated matrix does not match the dictionary");
  }
  const Eigen::Index n = evaluated.rows();
  std::vector<std::size_t> kept;
  if (n == 0) return kept;
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  auto negligible = [&](const Vector& x, const Vector& r) {
    const double x_rms = x.norm() / sqrt_n;
    const double r_rms = r.norm() / sqrt_n;
    return x_rms == 0.0 || r_rms < options.tol * x_rms;
  };

  if (options.scope == CollinearScope::global) {
    OrthoBasis basis(n);
    for (std::size_t t = 0; t < features.size(); ++t) {
      const Vector x = evaluated.col(static_cast<Eigen::Index>(t));
      const Vector r = basis.residual(x);
      if (t >= options.trusted_prefix && negligible(x, r)) continue;
      basis.append_residual(r);
      kept.push_back(t);
    }
    return kept;
  }

  std::vector<std::vector<std::size_t>> kept_vars;
  std::map<std::vector<std::size_t>, OrthoBasis> cache;
  for (std::size_t t = 0; t < features.size(); ++t) {
    const Vector x = evaluated.col(static_cast<Eigen::Index>(t));
    auto vars = features[t].variables();
    if (t >= options.trusted_prefix) {
      auto it = cache.find(vars);
      if (it == cache.end()) {
        OrthoBasis b(n);
        for (std::size_t k = 0; k < kept.size(); ++k) {
          if (is_subset(kept_vars[k], vars)) b.append(evaluated.col(static_cast<Eigen::Index>(kept[k])));
        }
        it = cache.emplace(vars, std::move(b)).first;
      }
      if (negligible(x, it->second.residual(x))) continue;
    }
    for (auto& [s, b] : cache) {
      if (is_subset(vars, s)) b.append(x);
    }
    kept.push_back(t);
    kept_vars.push_back(std::move(vars));
  }
  return kept;
}

Dictionary prune_collinear(const Dictionary& dict, const Matrix& evaluated, double tol) {
  CollinearOptions opt;
  opt.tol = tol;
  const auto keep = collinear_keep_indices(dict.features, evaluated, opt);
  Dictionary out;
  out.generation = dict.generation;
  out.features.reserve(keep.size());
  for (auto t : keep) out.features.push_back(dict.features[t]);
  return out;
}

}  // namespace hsel
