#include "hiersel/hiersel.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "hiersel/data_io.hpp"
#include "hiersel/error.hpp"
#include "hiersel/hierarchy.hpp"
#include "hiersel/lasso_path.hpp"
#include "hiersel/pruning.hpp"
#include "hiersel/serialize.hpp"
#include "json.hpp"

struct hs_dataset {
  hsel::TabularDataset data;
  std::optional<hsel::SyntheticTruth> truth;
};

struct hs_path {
  hsel::RegularizationPath path;
};

struct hs_model {
  hsel::SparseCoefficients beta;
};

struct hs_hier_result {
  hsel::HierarchyResult result;
  hsel::HierarchyConfig config;
};

namespace {

thread_local std::string last_error;

hs_status set_error(hs_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename F>
hs_status guard(F&& body) {
  try {
    body();
    last_error.clear();
    return HS_OK;
  } catch (const hsel::Error& e) {
    return set_error(static_cast<hs_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(HS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(HS_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (!p) hsel::fail(hsel::ErrorCode::invalid_argument, std::string(what) + " is null");
}

// Design used by the path solver and backward pruning.
struct Prepared {
  hsel::DesignMatrix z;
  hsel::Vector y;
};

Prepared prepare(const hsel::TabularDataset& d, bool center) {
  if (d.rows() == 0 || d.cols() == 0) hsel::fail(hsel::ErrorCode::invalid_argument, "dataset is empty");
  if (!center) return {hsel::normalize_columns(d.predictors), d.response};
  auto c = hsel::center_columns(d.predictors);
  hsel::Vector y = d.response.array() - d.response.mean();
  return {hsel::normalize_columns(c.values), y};
}

hsel::HierarchyConfig to_core(const hs_hier_config& c) {
  hsel::HierarchyConfig out;
  out.basis = c.basis == HS_BASIS_RAMP ? hsel::BasisKind::ramp : hsel::BasisKind::step;
  out.functions_per_variable = c.functions_per_variable;
  out.ramp_spacing = c.ramp_spacing;
  out.k_tilde = c.k_tilde;
  out.k = c.k;
  out.max_iterations = c.max_iterations;
  out.r2_epsilon = c.r2_epsilon;
  out.prune = static_cast<hsel::PruneStrategy>(c.prune);
  out.split_fraction = c.split_fraction;
  out.seed = c.seed;
  out.collinear_tol = c.collinear_tol;
  out.collinear_scope =
      c.collinear_scope == HS_COLLINEAR_GLOBAL ? hsel::CollinearScope::global : hsel::CollinearScope::ancestral;
  return out;
}

}  // namespace

extern "C" {

const char* hs_version(void) { return "1.0.0"; }

const char* hs_last_error(void) { return last_error.c_str(); }

void hs_string_free(char* s) { std::free(s); }

hs_status hs_dataset_simulate_linear(size_t n, size_t p, size_t active, double sigma, double rho, uint64_t seed,
                                     int formula, hs_dataset** out) {
  return guard([&] {
    need(out, "out");
    auto f = formula == 1 ? hsel::CoefficientFormula::two_j : hsel::CoefficientFormula::j_squared;
    auto sim = hsel::simulate_linear_gaussian(n, p, active, sigma, rho, seed, f);
    *out = new hs_dataset{std::move(sim.dataset), std::move(sim.truth)};
  });
}

hs_status hs_dataset_simulate_step(size_t n, uint64_t seed, hs_dataset** out) {
  return guard([&] {
    need(out, "out");
    auto sim = hsel::simulate_step_interaction(n, seed);
    *out = new hs_dataset{std::move(sim.dataset), std::move(sim.truth)};
  });
}

hs_status hs_dataset_load_csv(const char* path, const char* response_column, hs_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(response_column, "response_column");
    need(out, "out");
    *out = new hs_dataset{hsel::load_csv(path, response_column), std::nullopt};
  });
}

hs_status hs_dataset_write_csv(const hs_dataset* data, const char* path) {
  return guard([&] {
    need(data, "data");
    need(path, "path");
    hsel::write_csv(data->data, path);
  });
}

hs_status hs_dataset_truth_json(const hs_dataset* data, char** out) {
  return guard([&] {
    need(data, "data");
    need(out, "out");
    if (!data->truth) hsel::fail(hsel::ErrorCode::invalid_argument, "dataset has no generating truth");
    *out = dup_string(hsel::truth_to_json(*data->truth));
  });
}

hs_status hs_dataset_warnings_json(const hs_dataset* data, char** out) {
  return guard([&] {
    need(data, "data");
    need(out, "out");
    *out = dup_string(nlohmann::json(data->data.warnings).dump() + "\n");
  });
}

size_t hs_dataset_rows(const hs_dataset* data) { return data ? data->data.rows() : 0; }

size_t hs_dataset_cols(const hs_dataset* data) { return data ? data->data.cols() : 0; }

hs_status hs_dataset_split(const hs_dataset* data, size_t n_train, uint64_t seed, hs_dataset** train,
                           hs_dataset** test) {
  return guard([&] {
    need(data, "data");
    need(train, "train");
    need(test, "test");
    auto split = hsel::train_test_split(data->data, n_train, seed);
    auto* a = new hs_dataset{std::move(split.train), std::nullopt};
    *test = new hs_dataset{std::move(split.test), std::nullopt};
    *train = a;
  });
}

hs_status hs_dataset_adopt_normalization(hs_dataset* target, const hs_dataset* source) {
  return guard([&] {
    need(target, "target");
    need(source, "source");
    if (target->data.column_names != source->data.column_names) {
      hsel::fail(hsel::ErrorCode::dimension_mismatch, "datasets have different predictor columns");
    }
    target->data.normalization = source->data.normalization;
  });
}

void hs_dataset_free(hs_dataset* data) { delete data; }

hs_status hs_path_compute(const hs_dataset* data, size_t stop_size, int center, hs_path** out) {
  return guard([&] {
    need(data, "data");
    need(out, "out");
    auto prep = prepare(data->data, center != 0);
    *out = new hs_path{hsel::lars_path(prep.z, hsel::ResponseVector{prep.y}, stop_size)};
  });
}

hs_status hs_path_csv(const hs_path* path, char** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = dup_string(hsel::path_to_csv(path->path));
  });
}

hs_status hs_path_thresholds_json(const hs_path* path, size_t mark, char** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = dup_string(hsel::thresholds_to_json(path->path, mark));
  });
}

int hs_path_stalled(const hs_path* path) { return path && path->path.stalled ? 1 : 0; }

size_t hs_path_breakpoints(const hs_path* path) { return path ? path->path.breakpoints.size() : 0; }

hs_status hs_path_terminal_model(const hs_path* path, hs_model** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new hs_model{path->path.last().beta};
  });
}

void hs_path_free(hs_path* path) { delete path; }

hs_status hs_default_penalty(size_t n, size_t p, double a, double* out) {
  return guard([&] {
    need(out, "out");
    *out = hsel::default_penalty(static_cast<double>(n), static_cast<double>(p), a);
  });
}

hs_status hs_lasso_penalized(const hs_dataset* data, double r, int center, hs_model** out) {
  return guard([&] {
    need(data, "data");
    need(out, "out");
    auto prep = prepare(data->data, center != 0);
    *out = new hs_model{hsel::lasso_penalized(prep.z, hsel::ResponseVector{prep.y}, r)};
  });
}

hs_status hs_model_from_json(const char* text, hs_model** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = new hs_model{hsel::coefficients_from_json(text)};
  });
}

hs_status hs_model_to_json(const hs_model* model, char** out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    *out = dup_string(hsel::coefficients_to_json(model->beta));
  });
}

size_t hs_model_dimension(const hs_model* model) { return model ? model->beta.dimension() : 0; }

size_t hs_model_nnz(const hs_model* model) { return model ? model->beta.support_size() : 0; }

double hs_model_l1(const hs_model* model) { return model ? model->beta.l1_norm() : 0.0; }

void hs_model_free(hs_model* model) { delete model; }

hs_status hs_model_prune(const hs_model* model, const hs_prune_options* options, hs_model** out,
                         char** trace_json) {
  return guard([&] {
    need(model, "model");
    need(options, "options");
    need(out, "out");
    hsel::Rng rng(options->seed, 0);
    hsel::PruneTrace trace{{}, options->seed, 0};
    hsel::SparseCoefficients result(model->beta.dimension());
    switch (options->strategy) {
      case HS_PRUNE_RANDOMIZED: {
        auto r = hsel::prune_randomized(model->beta, options->k, rng);
        result = std::move(r.beta);
        trace = std::move(r.trace);
        break;
      }
      case HS_PRUNE_MAUREY:
        result = hsel::prune_maurey(model->beta, options->k, rng);
        break;
      case HS_PRUNE_BACKWARD: {
        need(options->data, "options->data");
        auto prep = prepare(options->data->data, options->center != 0);
        if (prep.z.cols() != model->beta.dimension()) {
          hsel::fail(hsel::ErrorCode::dimension_mismatch, "model dimension does not match the dataset");
        }
        result = hsel::prune_backward(prep.z, hsel::ResponseVector{prep.y}, model->beta, options->k);
        break;
      }
      default:
        hsel::fail(hsel::ErrorCode::invalid_argument, "unknown prune strategy");
    }
    std::string trace_text = trace_json ? hsel::prune_trace_to_json(trace) : std::string();
    auto* m = new hs_model{std::move(result)};
    if (trace_json) {
      try {
        *trace_json = dup_string(trace_text);
      } catch (...) {
        delete m;
        throw;
      }
    }
    *out = m;
  });
}

void hs_hier_config_default(hs_hier_config* config) {
  if (!config) return;
  hsel::HierarchyConfig d;
  config->basis = d.basis == hsel::BasisKind::ramp ? HS_BASIS_RAMP : HS_BASIS_STEP;
  config->functions_per_variable = d.functions_per_variable;
  config->ramp_spacing = d.ramp_spacing;
  config->k_tilde = d.k_tilde;
  config->k = d.k;
  config->max_iterations = d.max_iterations;
  config->r2_epsilon = d.r2_epsilon;
  config->prune = static_cast<hs_prune_strategy>(d.prune);
  config->split_fraction = d.split_fraction;
  config->seed = d.seed;
  config->collinear_tol = d.collinear_tol;
  config->collinear_scope =
      d.collinear_scope == hsel::CollinearScope::global ? HS_COLLINEAR_GLOBAL : HS_COLLINEAR_ANCESTRAL;
}

hs_status hs_hier_config_to_json(const hs_hier_config* config, char** out) {
  return guard([&] {
    need(config, "config");
    need(out, "out");
    *out = dup_string(hsel::hierarchy_config_to_json(to_core(*config)));
  });
}

hs_status hs_hier_run(const hs_dataset* data, const hs_hier_config* config, hs_hier_result** out) {
  return guard([&] {
    need(data, "data");
    need(config, "config");
    need(out, "out");
    if (data->data.rows() == 0 || data->data.cols() == 0) {
      hsel::fail(hsel::ErrorCode::invalid_argument, "dataset is empty");
    }
    auto cfg = to_core(*config);
    auto result = hsel::run_hierarchy(data->data.normalized(), data->data.response, cfg);
    *out = new hs_hier_result{std::move(result), cfg};
  });
}

size_t hs_hier_iterations(const hs_hier_result* result) { return result ? result->result.iterations.size() : 0; }

hs_status hs_hier_report_json(const hs_hier_result* result, char** out) {
  return guard([&] {
    need(result, "result");
    need(out, "out");
    *out = dup_string(hsel::hierarchy_report_to_json(result->result, result->config));
  });
}

hs_status hs_hier_model_json(const hs_hier_result* result, char** out) {
  return guard([&] {
    need(result, "result");
    need(out, "out");
    *out = dup_string(hsel::final_model_to_json(result->result.model));
  });
}

hs_status hs_hier_predict(const hs_hier_result* result, const hs_dataset* data, double* out, size_t len) {
  return guard([&] {
    need(result, "result");
    need(data, "data");
    need(out, "out");
    if (len < data->data.rows()) hsel::fail(hsel::ErrorCode::dimension_mismatch, "output buffer too small");
    hsel::Vector pred = result->result.model.predict(data->data.normalized());
    for (Eigen::Index i = 0; i < pred.size(); ++i) out[i] = pred[i];
  });
}

hs_status hs_hier_test_correlation(const hs_hier_result* result, const hs_dataset* data, double* out) {
  return guard([&] {
    need(result, "result");
    need(data, "data");
    need(out, "out");
    hsel::Vector pred = result->result.model.predict(data->data.normalized());
    *out = hsel::pearson_correlation(pred, data->data.response);
  });
}

void hs_hier_free(hs_hier_result* result) { delete result; }

}  // extern "C"
