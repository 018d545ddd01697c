#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hiersel/hiersel.h"
#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct Failure {
  int code;
  std::string message;
};

// JSON config files: flat {"option": value} objects, or a manifest whose
// "config" member holds one.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    Json j = Json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        auto r = opt->results();
        j[name] = r.size() == 1 ? Json(r.front()) : Json(r);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    Json j;
    try {
      j = Json::parse(input);
    } catch (const Json::exception& e) {
      throw CLI::ConversionError("config", e.what());
    }
    if (j.contains("command") && j.contains("config") && j["config"].is_object()) j = j["config"];
    if (!j.is_object()) throw CLI::ConversionError("config", "expected a JSON object");
    std::vector<std::string> parents;
    auto chosen = root_->get_subcommands();
    if (!chosen.empty()) parents.push_back(chosen.front()->get_name());
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else if (!value.is_object()) {
        item.inputs.push_back(scalar(value));
      } else {
        continue;
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  const CLI::App* root_;

  static std::string scalar(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }
};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kRuntimeFailure, "cannot read " + path};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Checks a C API status and turns failures into runtime errors.
void check(hs_status status) {
  if (status != HS_OK) throw Failure{kRuntimeFailure, hs_last_error()};
}

std::string take(char* s) {
  std::string out(s ? s : "");
  hs_string_free(s);
  return out;
}

struct Dataset {
  hs_dataset* ptr = nullptr;
  Dataset() = default;
  Dataset(const Dataset&) = delete;
  Dataset& operator=(const Dataset&) = delete;
  ~Dataset() { hs_dataset_free(ptr); }
};

struct Model {
  hs_model* ptr = nullptr;
  Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  ~Model() { hs_model_free(ptr); }
};

class Run {
 public:
  Run(std::string command, CLI::App* app, const std::string& out_dir)
      : command_(std::move(command)), app_(app), out_(out_dir), start_(std::chrono::steady_clock::now()) {}

  void input(const std::string& path) {
    if (path.empty()) return;
    std::ostringstream hex;
    hex << std::hex << fnv1a(read_file(path));
    inputs_.push_back(Json{{"path", path}, {"fnv1a64", hex.str()}});
  }

  void output(const std::string& name, const std::string& text) {
    fs::create_directories(out_);
    std::ofstream f(out_ / name, std::ios::binary);
    f << text;
    if (!f) throw Failure{kRuntimeFailure, "cannot write " + (out_ / name).string()};
    outputs_.push_back(name);
  }

  void output_file(const std::string& name) { outputs_.push_back(name); }

  fs::path path(const std::string& name) const {
    fs::create_directories(out_);
    return out_ / name;
  }

  void finish(std::uint64_t seed) {
    Json config = Json::object();
    for (const CLI::Option* opt : app_->get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help" || name == "config" || name == "out") continue;
      if (opt->get_expected_min() == 0) {
        config[name] = opt->count() > 0;
        continue;
      }
      std::vector<std::string> values = opt->count() > 0 ? opt->results() : std::vector<std::string>{};
      if (values.empty() && !opt->get_default_str().empty()) values.push_back(opt->get_default_str());
      if (values.empty()) continue;
      config[name] = typed(values.front());
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    Json manifest;
    manifest["command"] = command_;
    manifest["version"] = hs_version();
    manifest["config"] = std::move(config);
    manifest["seed"] = seed;
    manifest["inputs"] = inputs_;
    outputs_.push_back("manifest.json");
    manifest["outputs"] = outputs_;
    manifest["wall_seconds"] = seconds;
    fs::create_directories(out_);
    std::ofstream f(out_ / "manifest.json");
    f << manifest.dump(2) << "\n";
    if (!f) throw Failure{kRuntimeFailure, "cannot write manifest"};
  }

 private:
  static Json typed(const std::string& s) {
    if (s.empty()) return s;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    if (end && *end == '\0') {
      try {
        return Json::parse(s);
      } catch (const Json::exception&) {
      }
    }
    return s;
  }

  std::string command_;
  CLI::App* app_;
  fs::path out_;
  std::chrono::steady_clock::time_point start_;
  Json inputs_ = Json::array();
  std::vector<std::string> outputs_;
};

void load(Dataset& d, const std::string& path, const std::string& response) {
  check(hs_dataset_load_csv(path.c_str(), response.c_str(), &d.ptr));
  std::string warnings = take([&] {
    char* s = nullptr;
    check(hs_dataset_warnings_json(d.ptr, &s));
    return s;
  }());
  for (const auto& w : Json::parse(warnings)) std::cerr << "warning: " << w.get<std::string>() << "\n";
}

struct SimulateArgs {
  std::string kind;
  std::size_t n = 100;
  std::size_t p = 150;
  std::size_t active = 10;
  double sigma = 0.1;
  double rho = 0.0;
  std::uint64_t seed = 0;
  std::string formula = "j2";
};

struct PathArgs {
  std::string data;
  std::string response = "y";
  std::size_t stop_size = 40;
  std::size_t marks = 5;
  bool center = false;
};

struct LassoArgs {
  std::string data;
  std::string response = "y";
  double r = 0.0;
  double a = 1.0;
  bool center = false;
};

struct PruneArgs {
  std::string model;
  std::string strategy = "randomized";
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::string data;
  std::string response = "y";
  bool center = false;
};

struct HierArgs {
  std::string data;
  std::string response = "y";
  std::string test;
  std::size_t train_size = 0;
  std::string basis = "step";
  std::size_t l = 32;
  double ramp_spacing = 1.0 / 32.0;
  std::size_t k_tilde = 40;
  std::size_t k = 20;
  std::size_t max_iterations = 10;
  double epsilon = 1e-4;
  std::string prune = "backward";
  double split = 1.0;
  std::uint64_t seed = 0;
  double collinear_tol = 1e-8;
  std::string collinear_scope = "ancestral";
};

const std::map<std::string, hs_prune_strategy> kStrategies{
    {"backward", HS_PRUNE_BACKWARD}, {"randomized", HS_PRUNE_RANDOMIZED}, {"maurey", HS_PRUNE_MAUREY}};

void run_simulate(CLI::App* app, const SimulateArgs& a, const std::string& out) {
  Run run("simulate", app, out);
  Dataset d;
  if (a.kind == "linear") {
    check(hs_dataset_simulate_linear(a.n, a.p, a.active, a.sigma, a.rho, a.seed, a.formula == "2j" ? 1 : 0,
                                     &d.ptr));
  } else {
    check(hs_dataset_simulate_step(a.n, a.seed, &d.ptr));
  }
  check(hs_dataset_write_csv(d.ptr, run.path("data.csv").c_str()));
  run.output_file("data.csv");
  char* truth = nullptr;
  check(hs_dataset_truth_json(d.ptr, &truth));
  run.output("truth.json", take(truth));
  run.finish(a.seed);
}

void run_path(CLI::App* app, const PathArgs& a, const std::string& out) {
  Run run("path", app, out);
  run.input(a.data);
  Dataset d;
  load(d, a.data, a.response);
  hs_path* path = nullptr;
  check(hs_path_compute(d.ptr, a.stop_size, a.center ? 1 : 0, &path));
  struct Free {
    hs_path* p;
    ~Free() { hs_path_free(p); }
  } guard{path};
  char* csv = nullptr;
  check(hs_path_csv(path, &csv));
  run.output("path.csv", take(csv));
  char* thresholds = nullptr;
  check(hs_path_thresholds_json(path, a.marks, &thresholds));
  run.output("thresholds.json", take(thresholds));
  Model m;
  check(hs_path_terminal_model(path, &m.ptr));
  char* model = nullptr;
  check(hs_model_to_json(m.ptr, &model));
  run.output("model.json", take(model));
  if (hs_path_stalled(path)) std::cerr << "warning: path stalled before reaching the stop size\n";
  run.finish(0);
}

void run_lasso(CLI::App* app, const LassoArgs& a, const std::string& out) {
  Run run("lasso", app, out);
  run.input(a.data);
  Dataset d;
  load(d, a.data, a.response);
  double r = a.r;
  if (r <= 0.0) check(hs_default_penalty(hs_dataset_rows(d.ptr), hs_dataset_cols(d.ptr), a.a, &r));
  Model m;
  check(hs_lasso_penalized(d.ptr, r, a.center ? 1 : 0, &m.ptr));
  char* model = nullptr;
  check(hs_model_to_json(m.ptr, &model));
  run.output("model.json", take(model));
  std::cout << "r = " << r << ", nonzeros = " << hs_model_nnz(m.ptr) << "\n";
  run.finish(0);
}

void run_prune(CLI::App* app, const PruneArgs& a, const std::string& out) {
  Run run("prune", app, out);
  run.input(a.model);
  run.input(a.data);
  Model source;
  check(hs_model_from_json(read_file(a.model).c_str(), &source.ptr));
  std::size_t support = hs_model_nnz(source.ptr);
  if (a.k >= support) {
    throw Failure{kUsageError, "--k must be smaller than the model's " + std::to_string(support) + " nonzeros"};
  }
  Dataset d;
  hs_prune_options opts{kStrategies.at(a.strategy), a.k, a.seed, nullptr, a.center ? 1 : 0};
  if (opts.strategy == HS_PRUNE_BACKWARD) {
    if (a.data.empty()) throw Failure{kUsageError, "--strategy backward needs --data"};
    load(d, a.data, a.response);
    opts.data = d.ptr;
  }
  Model pruned;
  char* trace = nullptr;
  check(hs_model_prune(source.ptr, &opts, &pruned.ptr, &trace));
  char* model = nullptr;
  check(hs_model_to_json(pruned.ptr, &model));
  run.output("model.json", take(model));
  run.output("trace.json", take(trace));
  std::cout << "nonzeros " << support << " -> " << hs_model_nnz(pruned.ptr) << ", l1 " << hs_model_l1(source.ptr)
            << " -> " << hs_model_l1(pruned.ptr) << "\n";
  run.finish(a.seed);
}

void run_hier(CLI::App* app, const HierArgs& a, const std::string& out) {
  Run run("hier", app, out);
  run.input(a.data);
  run.input(a.test);
  Dataset full;
  load(full, a.data, a.response);
  Dataset train;
  Dataset test;
  const hs_dataset* fit_on = full.ptr;
  if (a.train_size > 0) {
    check(hs_dataset_split(full.ptr, a.train_size, a.seed, &train.ptr, &test.ptr));
    fit_on = train.ptr;
  } else if (!a.test.empty()) {
    load(test, a.test, a.response);
    check(hs_dataset_adopt_normalization(test.ptr, full.ptr));
  }

  hs_hier_config cfg;
  hs_hier_config_default(&cfg);
  cfg.basis = a.basis == "ramp" ? HS_BASIS_RAMP : HS_BASIS_STEP;
  cfg.functions_per_variable = a.l;
  cfg.ramp_spacing = a.ramp_spacing;
  cfg.k_tilde = a.k_tilde;
  cfg.k = a.k;
  cfg.max_iterations = a.max_iterations;
  cfg.r2_epsilon = a.epsilon;
  cfg.prune = kStrategies.at(a.prune);
  cfg.split_fraction = a.split;
  cfg.seed = a.seed;
  cfg.collinear_tol = a.collinear_tol;
  cfg.collinear_scope = a.collinear_scope == "global" ? HS_COLLINEAR_GLOBAL : HS_COLLINEAR_ANCESTRAL;

  hs_hier_result* result = nullptr;
  check(hs_hier_run(fit_on, &cfg, &result));
  struct Free {
    hs_hier_result* p;
    ~Free() { hs_hier_free(p); }
  } guard{result};

  char* report = nullptr;
  check(hs_hier_report_json(result, &report));
  std::string report_text = take(report);
  run.output("report.json", report_text);
  char* model = nullptr;
  check(hs_hier_model_json(result, &model));
  run.output("model.json", take(model));

  for (const auto& it : Json::parse(report_text)["iterations"]) {
    std::cout << "m=" << it["m"] << " |F|=" << it["dictionary_size"] << " R2=" << it["r2"].get<double>()
              << " l1=" << it["l1"].get<double>() << "\n";
  }
  if (test.ptr) {
    double corr = 0.0;
    check(hs_hier_test_correlation(result, test.ptr, &corr));
    Json metrics{{"test_rows", hs_dataset_rows(test.ptr)}, {"test_correlation", corr}};
    run.output("metrics.json", metrics.dump(2) + "\n");
    std::cout << "test correlation " << corr << "\n";
  }
  run.finish(a.seed);
}

void add_common(CLI::App* sub, std::string& out) {
  sub->add_option("--out", out, "Output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical sparse regression with LASSO paths and exact-size pruning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", hs_version());
  app.fallthrough();
  app.set_config("--config", "", "JSON file with option values for the chosen command (flags take precedence)");
  app.config_formatter(std::make_shared<JsonConfig>(&app));

  std::string out = ".";

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset and its truth file");
  add_common(simulate, out);
  simulate->add_option("--kind", sim.kind, "linear or step")->required()->check(CLI::IsMember({"linear", "step"}));
  simulate->add_option("--n", sim.n, "Rows")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--p", sim.p, "Predictors (linear)")->capture_default_str();
  simulate->add_option("--active", sim.active, "Nonzero coefficients (linear)")->capture_default_str();
  simulate->add_option("--sigma", sim.sigma, "Noise standard deviation (linear)")->capture_default_str();
  simulate->add_option("--rho", sim.rho, "Pairwise predictor correlation (linear)")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--formula", sim.formula, "Coefficient reading: j2 = 10/(25+j^2), 2j = 10/(25+2j)")
      ->capture_default_str()
      ->check(CLI::IsMember({"j2", "2j"}));

  PathArgs pa;
  auto* path = app.add_subcommand("path", "Trace the LASSO path and export it");
  add_common(path, out);
  path->add_option("--data", pa.data, "Input CSV")->required()->check(CLI::ExistingFile);
  path->add_option("--response", pa.response, "Response column")->capture_default_str();
  path->add_option("--stop-size", pa.stop_size, "Stop at the first model with this many variables")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  path->add_option("--marks", pa.marks, "Record T where the model first exceeds multiples of this")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  path->add_flag("--center", pa.center, "Remove column and response means first");

  LassoArgs la;
  auto* lasso = app.add_subcommand("lasso", "Fit the penalized LASSO at one penalty");
  add_common(lasso, out);
  lasso->add_option("--data", la.data, "Input CSV")->required()->check(CLI::ExistingFile);
  lasso->add_option("--response", la.response, "Response column")->capture_default_str();
  lasso->add_option("--r", la.r, "Penalty; when omitted A sqrt(log p / n) is used");
  lasso->add_option("--A", la.a, "Penalty constant")->capture_default_str()->check(CLI::PositiveNumber);
  lasso->add_flag("--center", la.center, "Remove column and response means first");

  PruneArgs pr;
  auto* prune = app.add_subcommand("prune", "Reduce a saved model to K nonzeros");
  add_common(prune, out);
  prune->add_option("--model", pr.model, "Model JSON")->required()->check(CLI::ExistingFile);
  prune->add_option("--strategy", pr.strategy, "randomized, maurey or backward")
      ->capture_default_str()
      ->check(CLI::IsMember({"randomized", "maurey", "backward"}));
  prune->add_option("--k", pr.k, "Target number of nonzeros")->required()->check(CLI::PositiveNumber);
  prune->add_option("--seed", pr.seed, "Random seed")->capture_default_str();
  prune->add_option("--data", pr.data, "Design CSV (backward)")->check(CLI::ExistingFile);
  prune->add_option("--response", pr.response, "Response column")->capture_default_str();
  prune->add_flag("--center", pr.center, "Center the design as the model was fitted");

  HierArgs ha;
  auto* hier = app.add_subcommand("hier", "Hierarchical interaction selection");
  add_common(hier, out);
  hier->add_option("--data", ha.data, "Training CSV")->required()->check(CLI::ExistingFile);
  hier->add_option("--response", ha.response, "Response column")->capture_default_str();
  auto* test_opt = hier->add_option("--test", ha.test, "Test CSV for prediction correlation")
                       ->check(CLI::ExistingFile);
  hier->add_option("--train-size", ha.train_size, "Split --data at random into this many training rows")
      ->excludes(test_opt);
  hier->add_option("--basis", ha.basis, "step or ramp")->capture_default_str()->check(CLI::IsMember({"step", "ramp"}));
  hier->add_option("--L", ha.l, "Step functions per variable")->capture_default_str()->check(CLI::PositiveNumber);
  hier->add_option("--ramp-spacing", ha.ramp_spacing, "Ramp knot spacing")->capture_default_str();
  hier->add_option("--ktilde", ha.k_tilde, "LASSO model size")->capture_default_str()->check(CLI::PositiveNumber);
  hier->add_option("--k", ha.k, "Pruned model size")->capture_default_str()->check(CLI::PositiveNumber);
  hier->add_option("--max-iter", ha.max_iterations, "Iteration cap")->capture_default_str();
  hier->add_option("--epsilon", ha.epsilon, "Minimum R^2 gain to continue")->capture_default_str();
  hier->add_option("--prune", ha.prune, "backward, randomized or maurey")
      ->capture_default_str()
      ->check(CLI::IsMember({"randomized", "maurey", "backward"}));
  hier->add_option("--split", ha.split, "Share of rows used for selection")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  hier->add_option("--seed", ha.seed, "Random seed")->capture_default_str();
  hier->add_option("--collinear-tol", ha.collinear_tol, "Collinearity screening tolerance")->capture_default_str();
  hier->add_option("--collinear-scope", ha.collinear_scope, "global or ancestral")
      ->capture_default_str()
      ->check(CLI::IsMember({"global", "ancestral"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*simulate) run_simulate(simulate, sim, out);
    if (*path) run_path(path, pa, out);
    if (*lasso) run_lasso(lasso, la, out);
    if (*prune) run_prune(prune, pr, out);
    if (*hier) run_hier(hier, ha, out);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return 0;
}
