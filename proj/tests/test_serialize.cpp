#include "doctest.h"

#include <sstream>

#include "hiersel/serialize.hpp"
#include "json.hpp"

using namespace hsel;
using Json = nlohmann::json;

TEST_CASE("dictionary JSON round trip") {
  auto d = make_step_basis(2, 2);
  d.features.push_back(*d.features[0].times(d.features[3]));
  d.features.push_back(FeatureDescriptor({Factor{3, BasisKind::interval, 0.125, 0.25}}));
  d.features.push_back(FeatureDescriptor({Factor{1, BasisKind::ramp, 0.5, 0}}));
  auto text = dictionary_to_json(d);
  auto j = Json::parse(text);
  CHECK(j[0]["factors"][0]["var"] == 1);
  CHECK(j[0]["factors"][0]["kind"] == "step");
  CHECK(j[5]["factors"][0]["param"].is_array());
  auto back = dictionary_from_json(text);
  CHECK(back.features == d.features);
  CHECK(dictionary_to_json(back) == text);
  CHECK_THROWS_AS(dictionary_from_json("[{\"factors\": [{\"var\": 1}]}]"), Error);
  CHECK_THROWS_AS(dictionary_from_json("not json"), Error);
}

TEST_CASE("coefficient JSON round trip is exact") {
  SparseCoefficients b(7);
  b.set(2, 0.1);
  b.set(5, -1.0 / 3.0);
  auto text = coefficients_to_json(b);
  CHECK(coefficients_from_json(text) == b);
  try {
    coefficients_from_json("{\"dimension\": 2, \"coefficients\": [{\"index\": 4, \"value\": 1}]}");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::dimension_mismatch);
  }
}

TEST_CASE("prune trace JSON") {
  SparseCoefficients b(4);
  b.set(0, 4.0);
  b.set(1, 1.0);
  b.set(3, 1.0);
  Rng rng(5, 2);
  auto r = prune_randomized(b, 2, rng);
  auto j = Json::parse(prune_trace_to_json(r.trace));
  CHECK(j["seed"] == 5);
  CHECK(j["stream"] == 2);
  REQUIRE(j["steps"].size() == 1);
  CHECK(j["steps"][0]["dropped_index"] != 0);
  CHECK(j["steps"][0]["probabilities"].size() == 3);
  CHECK(j["steps"][0]["l1_change"].get<double>() == 0.0);
}

TEST_CASE("path CSV is long format") {
  RegularizationPath path;
  PathBreakpoint a;
  a.beta = SparseCoefficients(3);
  PathBreakpoint b;
  b.t = 0.5;
  b.lambda = 0.2;
  b.beta = SparseCoefficients(3);
  b.beta.set(2, -0.5);
  b.active_set = {2};
  PathBreakpoint c;
  c.t = 1.0;
  c.beta = SparseCoefficients(3);
  c.beta.set(0, 0.25);
  c.beta.set(2, -0.75);
  c.active_set = {2, 0};
  path.breakpoints = {a, b, c};
  CHECK(path_to_csv(path) == "T,col_index,coefficient\n0.5,2,-0.5\n1,0,0.25\n1,2,-0.75\n");
  auto j = Json::parse(thresholds_to_json(path, 1));
  REQUIRE(j["thresholds"].size() == 1);
  CHECK(j["thresholds"][0]["mark"] == 1);
  CHECK(j["thresholds"][0]["T"].get<double>() == 0.5);
  CHECK(j["knots"].size() == 3);
}

TEST_CASE("config JSON round trip and partial override") {
  HierarchyConfig c;
  c.k_tilde = 60;
  c.k = 30;
  c.basis = BasisKind::ramp;
  c.prune = PruneStrategy::randomized;
  c.seed = 99;
  auto back = hierarchy_config_from_json(hierarchy_config_to_json(c));
  CHECK(back.k_tilde == 60);
  CHECK(back.k == 30);
  CHECK(back.basis == BasisKind::ramp);
  CHECK(back.prune == PruneStrategy::randomized);
  CHECK(back.seed == 99);
  auto partial = hierarchy_config_from_json("{\"k\": 5}");
  CHECK(partial.k == 5);
  CHECK(partial.k_tilde == HierarchyConfig{}.k_tilde);
}

TEST_CASE("run report and final model") {
  auto sim = simulate_step_interaction(200, 3);
  HierarchyConfig c;
  c.max_iterations = 2;
  auto r = run_hierarchy(sim.dataset.normalized(), sim.dataset.response, c);
  auto rep = Json::parse(hierarchy_report_to_json(r, c));
  REQUIRE(rep["iterations"].size() == r.iterations.size());
  for (std::size_t m = 0; m < r.iterations.size(); ++m) {
    const auto& it = rep["iterations"][m];
    CHECK(it["m"] == m + 1);
    CHECK(it["dictionary_size"] == r.iterations[m].dictionary_size);
    CHECK(it["r2"].get<double>() == r.iterations[m].r2);
    CHECK(it["l1"].get<double>() == r.iterations[m].l1);
    CHECK(it["selected"].size() == r.iterations[m].selected.size());
    CHECK(it["entry_order"].size() == r.iterations[m].entry_order.size());
  }
  auto text = final_model_to_json(r.model);
  auto back = final_model_from_json(text);
  CHECK(back.descriptors == r.model.descriptors);
  CHECK(back.coefficients == r.model.coefficients);
  CHECK(back.intercept == r.model.intercept);
  CHECK_THROWS_AS(final_model_from_json("{\"descriptors\": [], \"coefficients\": [1], \"intercept\": 0}"), Error);
}

TEST_CASE("truth JSON") {
  auto sim = simulate_step_interaction(10, 1);
  auto j = Json::parse(truth_to_json(sim.truth));
  CHECK(j["kind"] == "step_interaction");
  CHECK(j["population_r2"].get<double>() == doctest::Approx(0.9));
  auto lin = simulate_linear_gaussian(10, 5, 2, 0.1, 0.5, 1);
  auto k = Json::parse(truth_to_json(lin.truth));
  CHECK(k["true_coefficients"].size() == 5);
  CHECK(k["rho"] == 0.5);
}
