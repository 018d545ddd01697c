#include "hiersel/serialize.hpp"

#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace hsel {

using Json = nlohmann::ordered_json;

namespace {

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::parse_error, std::string("invalid JSON: ") + e.what());
  }
}

Json factor_json(const Factor& f) {
  Json j;
  j["var"] = f.var;
  j["kind"] = to_string(f.kind);
  if (f.kind == BasisKind::interval) {
    j["param"] = Json::array({f.lo, f.hi});
  } else {
    j["param"] = f.lo;
  }
  return j;
}

Json descriptor_json(const FeatureDescriptor& d) {
  Json factors = Json::array();
  for (const auto& f : d.factors()) factors.push_back(factor_json(f));
  return Json{{"factors", std::move(factors)}};
}

FeatureDescriptor descriptor_from(const Json& j) {
  std::vector<Factor> factors;
  for (const auto& fj : j.at("factors")) {
    Factor f;
    f.var = fj.at("var").get<std::size_t>();
    f.kind = basis_kind_from_string(fj.at("kind").get<std::string>());
    const auto& param = fj.at("param");
    if (f.kind == BasisKind::interval) {
      f.lo = param.at(0).get<double>();
      f.hi = param.at(1).get<double>();
    } else {
      f.lo = param.get<double>();
    }
    factors.push_back(f);
  }
  return FeatureDescriptor(std::move(factors));
}

Json descriptors_json(const std::vector<FeatureDescriptor>& ds) {
  Json arr = Json::array();
  for (const auto& d : ds) arr.push_back(descriptor_json(d));
  return arr;
}

template <typename F>
auto guarded(F&& body) {
  try {
    return body();
  } catch (const Json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed document: ") + e.what());
  }
}

Json coefficients_json(const SparseCoefficients& beta) {
  Json coefs = Json::array();
  for (const auto& [j, v] : beta.entries()) coefs.push_back(Json{{"index", j}, {"value", v}});
  return Json{{"dimension", beta.dimension()}, {"coefficients", std::move(coefs)}};
}

}  // namespace

std::string dictionary_to_json(const Dictionary& dict) {
  return descriptors_json(dict.features).dump(2) + "\n";
}

Dictionary dictionary_from_json(const std::string& text) {
  const Json j = parse(text);
  return guarded([&] {
    Dictionary dict;
    for (const auto& item : j) dict.features.push_back(descriptor_from(item));
    return dict;
  });
}

std::string coefficients_to_json(const SparseCoefficients& beta) {
  return coefficients_json(beta).dump(2) + "\n";
}

SparseCoefficients coefficients_from_json(const std::string& text) {
  const Json j = parse(text);
  return guarded([&] {
    SparseCoefficients beta(j.at("dimension").get<std::size_t>());
    for (const auto& c : j.at("coefficients")) beta.set(c.at("index").get<std::size_t>(), c.at("value").get<double>());
    return beta;
  });
}

std::string prune_trace_to_json(const PruneTrace& trace) {
  Json steps = Json::array();
  for (const auto& s : trace.steps) {
    Json probs = Json::array();
    for (const auto& [j, p] : s.distribution.probs) {
      probs.push_back(Json{{"index", j}, {"p", p}, {"drop_probability", s.distribution.drop_probs.at(j)}});
    }
    steps.push_back(Json{{"dropped_index", s.dropped},
                         {"c", s.distribution.c},
                         {"probabilities", std::move(probs)},
                         {"l1_before", s.l1_before},
                         {"l1_after", s.l1_after},
                         {"l1_change", s.l1_after - s.l1_before}});
  }
  return Json{{"seed", trace.seed}, {"stream", trace.stream}, {"steps", std::move(steps)}}.dump(2) + "\n";
}

std::string path_to_csv(const RegularizationPath& path) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "T,col_index,coefficient\n";
  for (const auto& bp : path.breakpoints) {
    for (const auto& [j, v] : bp.beta.entries()) os << bp.t << ',' << j << ',' << v << '\n';
  }
  return os.str();
}

std::string thresholds_to_json(const RegularizationPath& path, std::size_t mark) {
  Json arr = Json::array();
  for (const auto& m : mark_thresholds(path, mark)) arr.push_back(Json{{"mark", m.mark}, {"T", m.t}});
  Json knots = Json::array();
  for (const auto& bp : path.breakpoints) {
    knots.push_back(Json{{"T", bp.t}, {"lambda", bp.lambda}, {"active_size", bp.active_set.size()}});
  }
  return Json{{"mark", mark}, {"stalled", path.stalled}, {"thresholds", std::move(arr)}, {"knots", std::move(knots)}}
             .dump(2) +
         "\n";
}

std::string truth_to_json(const SyntheticTruth& truth) {
  Json j;
  j["kind"] = truth.kind == SyntheticKind::linear_gaussian ? "linear_gaussian" : "step_interaction";
  j["true_coefficients"] = truth.true_coefficients;
  j["noise_sd"] = truth.noise_sd;
  j["rho"] = truth.rho;
  if (truth.kind == SyntheticKind::step_interaction) j["population_r2"] = truth.population_r2;
  return j.dump(2) + "\n";
}

namespace {

Json config_json(const HierarchyConfig& c) {
  Json j;
  j["basis"] = to_string(c.basis);
  j["L"] = c.functions_per_variable;
  j["ramp_spacing"] = c.ramp_spacing;
  j["ktilde"] = c.k_tilde;
  j["k"] = c.k;
  j["max_iterations"] = c.max_iterations;
  j["r2_epsilon"] = c.r2_epsilon;
  j["prune"] = to_string(c.prune);
  j["split_fraction"] = c.split_fraction;
  j["seed"] = c.seed;
  j["collinear_tol"] = c.collinear_tol;
  j["collinear_scope"] = to_string(c.collinear_scope);
  return j;
}

}  // namespace

std::string hierarchy_config_to_json(const HierarchyConfig& config) {
  return config_json(config).dump(2) + "\n";
}

HierarchyConfig hierarchy_config_from_json(const std::string& text) {
  const Json j = parse(text);
  return guarded([&] {
    HierarchyConfig c;
    if (j.contains("basis")) c.basis = basis_kind_from_string(j["basis"].get<std::string>());
    if (j.contains("L")) c.functions_per_variable = j["L"].get<std::size_t>();
    if (j.contains("ramp_spacing")) c.ramp_spacing = j["ramp_spacing"].get<double>();
    if (j.contains("ktilde")) c.k_tilde = j["ktilde"].get<std::size_t>();
    if (j.contains("k")) c.k = j["k"].get<std::size_t>();
    if (j.contains("max_iterations")) c.max_iterations = j["max_iterations"].get<std::size_t>();
    if (j.contains("r2_epsilon")) c.r2_epsilon = j["r2_epsilon"].get<double>();
    if (j.contains("prune")) c.prune = prune_strategy_from_string(j["prune"].get<std::string>());
    if (j.contains("split_fraction")) c.split_fraction = j["split_fraction"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("collinear_tol")) c.collinear_tol = j["collinear_tol"].get<double>();
    if (j.contains("collinear_scope")) c.collinear_scope = collinear_scope_from_string(j["collinear_scope"].get<std::string>());
    return c;
  });
}

std::string hierarchy_report_to_json(const HierarchyResult& result, const HierarchyConfig& config) {
  Json iters = Json::array();
  for (const auto& it : result.iterations) {
    Json sel = Json::array();
    for (std::size_t t = 0; t < it.selected.size(); ++t) {
      Json d = descriptor_json(it.selected[t]);
      d["label"] = it.selected[t].label();
      d["coefficient"] = it.coefficients[t];
      sel.push_back(std::move(d));
    }
    Json entry = Json::array();
    for (const auto& f : it.entry_order) entry.push_back(f.label());
    iters.push_back(Json{{"m", it.m},
                         {"dictionary_size", it.dictionary_size},
                         {"generation", it.generation},
                         {"lasso_size", it.lasso_size},
                         {"r2", it.r2},
                         {"l1", it.l1},
                         {"selected", std::move(sel)},
                         {"entry_order", std::move(entry)}});
  }
  Json j;
  j["config"] = config_json(config);
  j["iterations"] = std::move(iters);
  j["best_iteration"] = result.best_iteration;
  j["converged"] = result.converged;
  j["selection_rows"] = result.split.selection.size();
  j["estimation_rows"] = result.split.estimation.size();
  return j.dump(2) + "\n";
}

std::string final_model_to_json(const FinalModel& model) {
  Json labels = Json::array();
  for (const auto& d : model.descriptors) labels.push_back(d.label());
  Json j;
  j["descriptors"] = descriptors_json(model.descriptors);
  j["labels"] = std::move(labels);
  j["coefficients"] = model.coefficients;
  j["intercept"] = model.intercept;
  return j.dump(2) + "\n";
}

FinalModel final_model_from_json(const std::string& text) {
  const Json j = parse(text);
  return guarded([&] {
    FinalModel m;
    for (const auto& d : j.at("descriptors")) m.descriptors.push_back(descriptor_from(d));
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    if (m.coefficients.size() != m.descriptors.size()) {
      fail(ErrorCode::parse_error, "model has mismatched descriptor and coefficient counts");
    }
    return m;
  });
}

}  // namespace hsel
