#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <string>

#include "otprop/scenario.hpp"
#include "test_support.hpp"

using namespace otprop;
using otprop::testing::Rng;
namespace ot = otprop::testing;

namespace {

Json parse_file(const RunOutput& r, const std::string& name) {
  const auto it = r.files.find(name);
  if (it == r.files.end()) throw std::runtime_error("missing output " + name);
  return Json::parse(it->second);
}

Json dist_json(const EmpiricalDistribution& p) { return json_io::to_json(p); }

const char* kPlanScenario = R"({
  "kind": "plan",
  "system": {"A": [[0.5, -0.5], [1.0, 0.5]], "B": [[1, 0], [0, 1]], "D": [[0.1, 0], [0, 0.1]],
             "prestabilize": "lqr"},
  "x0": [0, 0], "horizon": 10, "gamma": 0.1, "eps": [0, 0.1],
  "target": {"box": {"lo": [1, 1], "hi": [2, 2]}},
  "samples": {"train": 5, "test": 20}, "seed": 3
})";

}  // namespace

TEST(ScenarioFormat, ShortestRoundTrip) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(u(rng)) % 20);
    const auto s = scenario::fmt(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, v);
  }
  EXPECT_EQ(scenario::fmt(0.25), "0.25");
  EXPECT_EQ(scenario::fmt(std::numeric_limits<double>::infinity()), "inf");
}

TEST(ScenarioFormat, Fnv1aKnownValues) {
  EXPECT_EQ(scenario::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(scenario::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(scenario::hex(0xabcULL), "0000000000000abc");
}

TEST(JsonIo, RoundTripsSetsAndCosts) {
  Rng rng(2);
  const auto p = ot::random_weighted(rng, 4, 3);
  Matrix w = ot::random_matrix(rng, 3, 3);
  w = w * w.transpose();
  for (const auto& cost : {TransportCost::quadratic(w), TransportCost::power(1.5, 2.0),
                           TransportCost::composed(TransportCost::power(2.0), PointMap::linear(Matrix(w)))}) {
    const OTAmbiguitySet s(p, 0.2, cost, false);
    const auto back = json_io::set_from(Json::parse(json_io::to_json(s).dump()), "set");
    EXPECT_TRUE(back.center.atoms() == s.center.atoms());
    EXPECT_TRUE(back.center.weights() == s.center.weights());
    EXPECT_EQ(back.radius, 0.2);
    EXPECT_FALSE(back.exact);
    EXPECT_TRUE(back.cost == s.cost) << cost.describe();
  }
}

TEST(JsonIo, SchemaErrors) {
  EXPECT_THROW(json_io::matrix_from(Json::parse("[[1,2],[3]]"), "m"), SchemaError);
  EXPECT_THROW(json_io::vector_from(Json::parse("[]"), "v"), SchemaError);
  EXPECT_THROW(json_io::distribution_from(Json::parse(R"({"dim":2,"atoms":[[1]]})"), "d"), SchemaError);
  EXPECT_THROW(json_io::cost_from(Json::parse(R"({"kind":"cubic"})"), "c"), SchemaError);
  EXPECT_THROW(json_io::set_from(Json::parse(R"({"center":{"atoms":[[0]]}})"), "s"), SchemaError);
}

TEST(RunScenario, MalformedJsonIsSchemaErrorWithoutOutputs) {
  const auto r = run_scenario_text("{\"kind\": \"plan\", ");
  EXPECT_EQ(r.exit_code, kExitSchema);
  EXPECT_TRUE(r.files.empty());
  const auto r2 = run_scenario_text(R"({"kind": "teleport"})");
  EXPECT_EQ(r2.exit_code, kExitSchema);
  EXPECT_TRUE(r2.files.empty());
  const auto r3 = run_scenario_text(R"({"kind": "discrepancy", "P": {"atoms": [[0]]}})");
  EXPECT_EQ(r3.exit_code, kExitSchema);
  EXPECT_TRUE(r3.files.empty());
}

TEST(RunScenario, GeneratedSamplesNeedSeed) {
  Json sc = Json::parse(kPlanScenario);
  sc.erase("seed");
  const auto r = run_scenario_text(sc.dump());
  EXPECT_EQ(r.exit_code, kExitSchema);
  EXPECT_NE(r.message.find("seed"), std::string::npos);
}

TEST(RunScenario, BoundaryExampleDiscrepancy) {
  const auto r = run_scenario_text(R"({"kind": "discrepancy",
      "P": {"dim": 1, "atoms": [[0]]},
      "Q": {"dim": 1, "atoms": [[2], [0]], "weights": [0.0625, 0.9375]}})");
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  const auto res = parse_file(r, "result.json");
  EXPECT_EQ(res["value"].get<double>(), 0.25);
  EXPECT_EQ(res["version"], kVersion);
  EXPECT_EQ(res["scenario_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(r.files.at("plan.csv").substr(0, 11), "i,j,mass\n0,");
}

TEST(RunScenario, DiscrepancyIdenticalAndBruteForce) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = ot::random_uniform(rng, 4, 2);
    const auto q = ot::random_uniform(rng, 4, 2);
    Json sc{{"kind", "discrepancy"}, {"P", dist_json(p)}, {"Q", dist_json(p)}};
    EXPECT_EQ(parse_file(run_scenario_text(sc.dump()), "result.json")["value"].get<double>(), 0.0);
    sc["Q"] = dist_json(q);
    const double v = parse_file(run_scenario_text(sc.dump()), "result.json")["value"].get<double>();
    EXPECT_NEAR(v, ot_discrepancy_bruteforce(p, q, TransportCost::squared_euclidean(2)), 1e-9);
  }
}

TEST(RunScenario, ConsensusRadiusIsEpsOverN) {
  for (const int n : {2, 3, 5}) {
    Matrix a = Matrix::Constant(n, n, 1.0 / (2.0 * n));
    a.diagonal().array() += 0.5;
    Json atoms = Json::array({json_io::to_json(Vector(Vector::LinSpaced(n, 0.0, 1.0)))});
    Json sc{{"kind", "consensus"},
            {"A", json_io::to_json(a)},
            {"initial", {{"center", {{"atoms", atoms}}}, {"radius", 0.7}}},
            {"steps", 5}};
    const auto r = run_scenario_text(sc.dump());
    ASSERT_EQ(r.exit_code, kExitOk) << r.message;
    const double expected = 0.7 / n;
    EXPECT_EQ(parse_file(r, "result.json")["radius"].get<double>(), expected);
    const auto& trace = r.files.at("trace.csv");
    const auto last_line = trace.substr(trace.rfind('\n', trace.size() - 2) + 1);
    EXPECT_EQ(last_line.substr(last_line.rfind(',') + 1), scenario::fmt(expected) + "\n");
  }
}

TEST(RunScenario, OverridesChangeDocumentAndHash) {
  const auto base = run_scenario_text(kPlanScenario);
  ASSERT_EQ(base.exit_code, kExitOk) << base.message;
  Overrides ov;
  ov.eps = 0.05;
  ov.gamma = 0.2;
  const auto other = run_scenario_text(kPlanScenario, ov);
  ASSERT_EQ(other.exit_code, kExitOk) << other.message;
  const auto rb = parse_file(base, "result.json");
  const auto ro = parse_file(other, "result.json");
  EXPECT_NE(rb["scenario_hash"], ro["scenario_hash"]);
  EXPECT_EQ(ro["plans"].size(), 1u);
  EXPECT_EQ(ro["plans"][0]["eps"].get<double>(), 0.05);
  EXPECT_EQ(ro["gamma"].get<double>(), 0.2);
}

TEST(RunScenario, DeterministicOutputs) {
  const auto a = run_scenario_text(kPlanScenario);
  const auto b = run_scenario_text(kPlanScenario);
  ASSERT_EQ(a.exit_code, kExitOk);
  EXPECT_EQ(a.files, b.files);
  for (const auto& [name, content] : a.files) {
    if (name.ends_with(".csv")) {
      EXPECT_NE(content.find('\n'), std::string::npos) << name;
    }
  }
  EXPECT_EQ(a.files.at("costs.csv").substr(0, 11), "eps,status,");
}

TEST(RunScenario, InfeasiblePlanWritesOnlyCertificate) {
  const auto r = run_scenario_text(R"({
    "kind": "plan",
    "system": {"A": [[0.5, 0], [0, 0.5]], "B": [[0], [0]]},
    "horizon": 1, "gamma": 0.5, "eps": 0.1,
    "target": {"box": {"lo": [1, 1], "hi": [2, 2]}},
    "train_samples": [[[0, 0]], [[0.01, 0.01]]]
  })");
  EXPECT_EQ(r.exit_code, kExitInfeasible);
  ASSERT_EQ(r.files.size(), 1u);
  const auto c = parse_file(r, "certificate.json");
  EXPECT_GT(c["infeasible"]["violation"].get<double>(), 0.9);
  EXPECT_EQ(c["infeasible"]["status"], "infeasible");
}

TEST(RunScenario, AtomBudgetIsNumericalFailure) {
  Json sc = Json::parse(R"({
    "kind": "propagate", "mode": "multiplicative",
    "system": {"A": [[0.9, 0.1], [0.0, 0.8]], "B": [[1.0], [0.5]]},
    "horizon": 3, "x0": [1, -1], "u": [[1], [0.5], [0]],
    "uncertainty": {
      "multiplier": {"center": {"atoms": [[1, 1], [0.9, 1.1]]}, "radius": 0.01},
      "input_noise": {"center": {"atoms": [[1, 1], [1.1, 0.9]]}, "radius": 0.02}}})");
  Overrides ov;
  ov.atom_budget = 20;
  const auto r = run_scenario_text(sc.dump(), ov);
  EXPECT_EQ(r.exit_code, kExitNumerical);
  EXPECT_TRUE(r.files.empty());
  const auto ok = run_scenario_text(sc.dump());
  ASSERT_EQ(ok.exit_code, kExitOk) << ok.message;
  EXPECT_NE(ok.files.at("radius.csv").find("3,64,"), std::string::npos);
}

TEST(RunScenario, PropagateAdditiveMatchesLibrary) {
  const auto r = run_scenario_text(R"({
    "kind": "propagate", "mode": "additive",
    "system": {"A": [[0.5, -0.5], [1.0, 0.5]], "B": [[1, 0], [0, 1]], "D": [[0.1, 0], [0, 0.1]]},
    "horizon": 2, "x0": [1, 0], "u": [[0, 0.5], [0.5, 0]],
    "uncertainty": {"noise_samples": [[[0.3, -0.1], [0, 0.2]]], "radius": 0.1}})");
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  const auto res = parse_file(r, "result.json");
  const auto set = json_io::set_from(res["set"], "set");
  Matrix a(2, 2);
  a << 0.5, -0.5, 1.0, 0.5;
  const LTISystem sys(a, Matrix::Identity(2, 2), 0.1 * Matrix::Identity(2, 2));
  Vector x0(2), u0(2), u1(2), w0(2), w1(2);
  x0 << 1, 0;
  u0 << 0, 0.5;
  u1 << 0.5, 0;
  w0 << 0.3, -0.1;
  w1 << 0, 0.2;
  const Vector x = simulate(sys, x0, {u0, u1}, {w0, w1});
  EXPECT_LE((set.center.atom(0) - x).norm(), 1e-12);
  EXPECT_EQ(set.radius, 0.1);
  EXPECT_TRUE(set.exact);
}

TEST(RunScenario, DemoBatchNestsOutputs) {
  Json sc{{"kind", "demo"},
          {"scenarios",
           {{"ex", {{"kind", "discrepancy"}, {"P", {{"atoms", {{0.0}}}}}, {"Q", {{"atoms", {{1.0}}}}}}},
            {"ols",
             {{"kind", "ols"},
              {"A", {{1.0, 0.0}, {1.0, 1.0}, {1.0, 2.0}}},
              {"iid", {{"center", {{"atoms", {{-0.1}, {0.1}}}}}, {"radius", 0.01}}}}}}}};
  const auto r = run_scenario_text(sc.dump());
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  EXPECT_TRUE(r.files.count("ex/result.json"));
  EXPECT_TRUE(r.files.count("ols/error_atoms.csv"));
  EXPECT_EQ(parse_file(r, "ex/result.json")["value"].get<double>(), 1.0);
  EXPECT_EQ(parse_file(r, "ols/result.json")["radius"].get<double>(), 3 * 0.01);
}
