#pragma once

// Scenario files: one JSON object with a "kind" and a kind-specific payload.
// Running one produces an in-memory set of output files plus an exit code;
// nothing is written unless the run succeeds (or, for an infeasible plan,
// only the certificate is written).

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "otprop/ambiguity.hpp"
#include "otprop/drcvar.hpp"
#include "otprop/json_io.hpp"
#include "otprop/systems.hpp"
#include "otprop/transport.hpp"

namespace otprop {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitSchema = 2,
  kExitNumerical = 3,
  kExitInfeasible = 4,
};

/// Command-line values that replace scenario fields.
struct Overrides {
  std::optional<double> eps;
  std::optional<double> gamma;
  std::optional<int> horizon;
  std::optional<std::uint64_t> seed;
  std::size_t atom_budget = kDefaultAtomBudget;
};

struct RunOutput {
  int exit_code = kExitOk;
  /// Relative path -> content.
  std::map<std::string, std::string> files;
  std::string message;
};

namespace scenario {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  char buf[17];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, 16);
  std::string s(buf, r.ptr);
  return std::string(16 - s.size(), '0') + s;
}

/// Shortest representation that reads back to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) { row_strings(header); }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  template <class... T>
  void row(const T&... cells) {
    std::vector<std::string> s;
    (s.push_back(cell(cells)), ...);
    row_strings(s);
  }

  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  std::ostringstream out_;
};

inline std::vector<std::string> indexed(const std::string& prefix, Eigen::Index n, const std::string& unit = "") {
  std::vector<std::string> out;
  for (Eigen::Index k = 0; k < n; ++k) out.push_back(prefix + std::to_string(k + 1) + unit);
  return out;
}

inline std::string atoms_csv(const EmpiricalDistribution& p) {
  std::vector<std::string> header{"atom", "weight"};
  for (auto& h : indexed("x", p.dim())) header.push_back(h);
  Csv csv(header);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    std::vector<std::string> r{std::to_string(i), fmt(p.weight(i))};
    for (Eigen::Index k = 0; k < p.dim(); ++k) r.push_back(fmt(p.atoms()(k, i)));
    csv.row_strings(r);
  }
  return csv.str();
}

inline Json header(const Json& scenario) {
  return Json{{"version", kVersion}, {"scenario_hash", hex(fnv1a(scenario.dump()))}, {"kind", scenario["kind"]}};
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// --- Overrides --------------------------------------------------------------

inline void set_radii(Json& j, double eps) {
  if (!j.is_object()) return;
  for (auto& [key, value] : j.items()) {
    if (!value.is_object()) continue;
    if (value.contains("center") && value.contains("radius")) {
      value["radius"] = eps;
    } else {
      set_radii(value, eps);
    }
  }
  if (j.contains("noise_samples") && j.contains("radius")) j["radius"] = eps;
}

/// Applies command-line overrides to the scenario document itself, so that
/// the recorded scenario and its hash describe what was actually run.
inline Json apply_overrides(Json scenario, const Overrides& ov) {
  if (!scenario.is_object()) throw SchemaError("scenario: expected a JSON object");
  const auto kind = json_io::text(json_io::field(scenario, "kind", "scenario"), "scenario.kind");
  if (ov.seed) scenario["seed"] = *ov.seed;
  if (ov.horizon && (kind == "plan" || kind == "propagate")) scenario["horizon"] = *ov.horizon;
  if (ov.gamma && kind == "plan") scenario["gamma"] = *ov.gamma;
  if (ov.eps) {
    if (kind == "plan") {
      scenario["eps"] = *ov.eps;
    } else if (kind == "propagate" && scenario.contains("uncertainty")) {
      set_radii(scenario["uncertainty"], *ov.eps);
    } else if (kind == "consensus" && scenario.contains("initial")) {
      scenario["initial"]["radius"] = *ov.eps;
    } else if (kind == "ols") {
      for (const char* k : {"noise", "iid"}) {
        if (scenario.contains(k)) scenario[k]["radius"] = *ov.eps;
      }
    }
  }
  if (kind == "demo" && scenario.contains("scenarios") && scenario["scenarios"].is_object()) {
    for (auto& [name, sub] : scenario["scenarios"].items()) sub = apply_overrides(sub, ov);
  }
  return scenario;
}

// --- Kinds ------------------------------------------------------------------

inline RunOutput run_discrepancy(const Json& sc) {
  const auto p = json_io::distribution_from(json_io::field(sc, "P", "discrepancy"), "discrepancy.P");
  const auto q = json_io::distribution_from(json_io::field(sc, "Q", "discrepancy"), "discrepancy.Q");
  const auto cost = json_io::has(sc, "cost") ? json_io::cost_from(sc["cost"], "discrepancy.cost")
                                             : TransportCost::squared_euclidean(p.dim());
  const auto r = ot_discrepancy(p, q, cost);
  Csv plan({"i", "j", "mass"});
  int nonzero = 0;
  for (Eigen::Index i = 0; i < r.plan.gamma.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.plan.gamma.cols(); ++j) {
      if (r.plan.gamma(i, j) > 0.0) {
        plan.row(static_cast<long>(i), static_cast<long>(j), r.plan.gamma(i, j));
        ++nonzero;
      }
    }
  }
  Json res = header(sc);
  res["value"] = r.value;
  res["cost"] = json_io::to_json(cost);
  res["plan_nonzeros"] = nonzero;
  res["marginal_residual"] = r.plan.max_marginal_residual();
  RunOutput out;
  out.files["result.json"] = dump(res);
  out.files["plan.csv"] = plan.str();
  return out;
}

inline std::vector<Vector> inputs_from(const Json& sc, const LTISystem& sys, int horizon, const std::string& ctx) {
  if (!json_io::has(sc, "u")) return std::vector<Vector>(static_cast<std::size_t>(horizon), Vector::Zero(sys.m()));
  auto u = json_io::sequence_from(sc["u"], ctx + ".u");
  if (static_cast<int>(u.size()) != horizon) throw SchemaError(ctx + ".u: expected one input per step");
  return u;
}

/// {"noise": set} or {"noise_samples": [trajectory...], "radius": eps}, over R^{rT}.
inline OTAmbiguitySet noise_from(const Json& unc, const std::string& ctx) {
  if (json_io::has(unc, "noise")) return json_io::set_from(unc["noise"], ctx + ".noise");
  const auto& samples = json_io::field(unc, "noise_samples", ctx);
  if (!samples.is_array() || samples.empty()) throw SchemaError(ctx + ".noise_samples: expected trajectories");
  std::vector<std::vector<Vector>> trajs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    trajs.push_back(json_io::sequence_from(samples[i], ctx + ".noise_samples[" + std::to_string(i) + "]"));
  }
  return noise_sample_set(trajs, json_io::number(json_io::field(unc, "radius", ctx), ctx + ".radius"));
}

inline RunOutput run_propagate(const Json& sc, const Overrides& ov) {
  const std::string ctx = "propagate";
  const auto sys = json_io::system_from(json_io::field(sc, "system", ctx), ctx + ".system");
  const int horizon = json_io::integer(json_io::field(sc, "horizon", ctx), ctx + ".horizon");
  if (horizon < 1) throw SchemaError(ctx + ".horizon: must be >= 1");
  const auto mode = json_io::text(json_io::field(sc, "mode", ctx), ctx + ".mode");
  const auto& unc = json_io::field(sc, "uncertainty", ctx);
  const auto u = inputs_from(sc, sys, horizon, ctx);
  const auto x0 = [&] { return json_io::vector_from(json_io::field(sc, "x0", ctx), ctx + ".x0"); };

  RunOutput out;
  Json res = header(sc);
  std::optional<OTAmbiguitySet> set;
  if (mode == "initial") {
    set = propagate_initial(sys, json_io::set_from(json_io::field(unc, "initial", ctx), ctx + ".initial"), u, horizon);
  } else if (mode == "additive") {
    set = propagate_additive(sys, x0(), u, noise_from(unc, ctx + ".uncertainty"), horizon);
  } else if (mode == "multiplicative") {
    Csv trace({"t[step]", "atoms", "radius"});
    set = propagate_multiplicative(
        sys, x0(), u, json_io::set_from(json_io::field(unc, "multiplier", ctx), ctx + ".multiplier"),
        json_io::set_from(json_io::field(unc, "input_noise", ctx), ctx + ".input_noise"), horizon, ov.atom_budget,
        [&](const MultiplicativeStep& s) { trace.row(s.t, static_cast<long>(s.atoms), s.radius); });
    out.files["radius.csv"] = trace.str();
  } else if (mode == "combined") {
    CombinedRadius rule = CombinedRadius::sound;
    if (json_io::has(unc, "rule")) {
      const auto r = json_io::text(unc["rule"], ctx + ".rule");
      if (r == "divided") {
        rule = CombinedRadius::divided;
      } else if (r != "sound") {
        throw SchemaError(ctx + ".rule: expected \"sound\" or \"divided\"");
      }
    }
    set = propagate_combined(sys, json_io::set_from(json_io::field(unc, "initial", ctx), ctx + ".initial"),
                             noise_from(unc, ctx + ".uncertainty"), u, horizon, rule, ov.atom_budget);
  } else {
    throw SchemaError(ctx + ".mode: unknown mode '" + mode + "'");
  }
  res["mode"] = mode;
  res["horizon"] = horizon;
  res["atoms"] = set->center.size();
  res["radius"] = set->radius;
  res["exact"] = set->exact;
  res["set"] = json_io::to_json(*set);
  out.files["result.json"] = dump(res);
  out.files["atoms.csv"] = atoms_csv(set->center);
  return out;
}

inline RunOutput run_consensus(const Json& sc) {
  const std::string ctx = "consensus";
  const Matrix a = json_io::matrix_from(json_io::field(sc, "A", ctx), ctx + ".A");
  const auto s0 = json_io::set_from(json_io::field(sc, "initial", ctx), ctx + ".initial");
  const int steps = json_io::has(sc, "steps") ? json_io::integer(sc["steps"], ctx + ".steps") : 50;
  if (steps < 0) throw SchemaError(ctx + ".steps: must be >= 0");
  const auto lim = consensus_limit(a, s0);
  const auto n = a.rows();

  Csv trace({"step", "max_disagreement[state]", "radius"});
  Matrix x = s0.center.atoms();
  for (int k = 0; k <= steps; ++k) {
    const Vector consensus = (lim.weights.transpose() * s0.center.atoms()).transpose();
    double dev = 0.0;
    for (Eigen::Index i = 0; i < x.cols(); ++i) dev = std::max(dev, (x.col(i).array() - consensus(i)).abs().maxCoeff());
    trace.row(k, dev, lim.set.radius);
    x = a * x;
  }
  Csv summary({"n", "eps", "radius", "radius_times_n", "weight_norm_sq"});
  summary.row(static_cast<long>(n), s0.radius, lim.set.radius, lim.set.radius * static_cast<double>(n),
              lim.weights.squaredNorm());

  Json res = header(sc);
  res["weights"] = json_io::to_json(lim.weights);
  res["radius"] = lim.set.radius;
  res["limit_set"] = json_io::to_json(lim.set);
  res["doubly_stochastic"] = (a.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9;
  RunOutput out;
  out.files["result.json"] = dump(res);
  out.files["trace.csv"] = trace.str();
  out.files["summary.csv"] = summary.str();
  return out;
}

inline RunOutput run_ols(const Json& sc, const Overrides& ov) {
  const std::string ctx = "ols";
  const Matrix a = json_io::matrix_from(json_io::field(sc, "A", ctx), ctx + ".A");
  OTAmbiguitySet set = json_io::has(sc, "iid")
                           ? ols_error_set_iid(a, json_io::set_from(sc["iid"], ctx + ".iid"), ov.atom_budget)
                           : ols_error_set(a, json_io::set_from(json_io::field(sc, "noise", ctx), ctx + ".noise"));
  Json res = header(sc);
  res["atoms"] = set.center.size();
  res["radius"] = set.radius;
  res["exact"] = set.exact;
  res["set"] = json_io::to_json(set);
  RunOutput out;
  out.files["result.json"] = dump(res);
  out.files["error_atoms.csv"] = atoms_csv(set.center);
  return out;
}

inline std::vector<std::vector<Vector>> trajectories_from(const Json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) throw SchemaError(ctx + ": expected a non-empty array of trajectories");
  std::vector<std::vector<Vector>> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(json_io::sequence_from(j[i], ctx + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<std::vector<Vector>> gaussian_trajectories(std::mt19937_64& rng, int count, int horizon, int r,
                                                              double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  std::vector<std::vector<Vector>> out(static_cast<std::size_t>(count));
  for (auto& traj : out) {
    traj.resize(static_cast<std::size_t>(horizon));
    for (auto& w : traj) {
      w.resize(r);
      for (Eigen::Index k = 0; k < r; ++k) w(k) = normal(rng);
    }
  }
  return out;
}

inline RunOutput run_plan(const Json& sc) {
  const std::string ctx = "plan";
  const auto sys = json_io::system_from(json_io::field(sc, "system", ctx), ctx + ".system");
  const int horizon = json_io::integer(json_io::field(sc, "horizon", ctx), ctx + ".horizon");
  if (horizon < 1) throw SchemaError(ctx + ".horizon: must be >= 1");
  const double gamma = json_io::number(json_io::field(sc, "gamma", ctx), ctx + ".gamma");
  const auto target = json_io::target_from(json_io::field(sc, "target", ctx), ctx + ".target");
  const Vector x0 = json_io::has(sc, "x0") ? json_io::vector_from(sc["x0"], ctx + ".x0") : Vector(Vector::Zero(sys.n()));
  const Vector eps_list = json_io::vector_from(json_io::field(sc, "eps", ctx), ctx + ".eps");

  std::vector<std::vector<Vector>> train, test;
  if (json_io::has(sc, "train_samples")) {
    train = trajectories_from(sc["train_samples"], ctx + ".train_samples");
    if (json_io::has(sc, "test_samples")) test = trajectories_from(sc["test_samples"], ctx + ".test_samples");
  } else {
    const auto& gen = json_io::field(sc, "samples", ctx);
    if (!json_io::has(sc, "seed")) throw SchemaError(ctx + ": generated samples need a seed");
    if (!sc["seed"].is_number_unsigned()) throw SchemaError(ctx + ".seed: expected a non-negative integer");
    const int n_train = json_io::integer(json_io::field(gen, "train", ctx + ".samples"), ctx + ".samples.train");
    const int n_test = json_io::has(gen, "test") ? json_io::integer(gen["test"], ctx + ".samples.test") : 0;
    const double sd = json_io::has(gen, "std") ? json_io::number(gen["std"], ctx + ".samples.std") : 1.0;
    if (n_train < 1 || n_test < 0 || !(sd >= 0.0)) throw SchemaError(ctx + ".samples: invalid counts or std");
    std::mt19937_64 rng(sc["seed"].get<std::uint64_t>());
    train = gaussian_trajectories(rng, n_train, horizon, sys.r(), sd);
    test = gaussian_trajectories(rng, n_test, horizon, sys.r(), sd);
  }

  Json plans = Json::array();
  std::vector<std::string> cost_header{"eps", "status", "cost[input^2]", "relative_to_eps0", "worst_case_cvar",
                                       "lambda", "train_cvar", "train_fraction_in_target", "test_cvar",
                                       "test_fraction_in_target"};
  Csv costs(cost_header);
  std::vector<std::string> th{"eps", "split", "sample"};
  for (auto& h : indexed("x", sys.n())) th.push_back(h);
  Csv terminal(th);
  std::vector<std::string> ih{"eps", "t[step]"};
  for (auto& h : indexed("u", sys.m())) ih.push_back(h);
  Csv inputs(ih);

  std::optional<double> base_cost;
  Json infeasible = nullptr;
  for (Eigen::Index k = 0; k < eps_list.size(); ++k) {
    const double eps = eps_list(k);
    const auto r = plan_trajectory(sys, x0, train, target, eps, gamma, horizon);
    Json cert{{"tau", r.certificate.tau},
              {"lambda", number_or_null(r.certificate.lambda)},
              {"s", json_io::to_json(r.certificate.s)}};
    if (r.status == PlanStatus::infeasible) {
      infeasible = Json{{"eps", eps},
                        {"status", to_string(r.status)},
                        {"violation", r.violation},
                        {"worst_case_cvar", r.worst_case_cvar},
                        {"certificate", cert}};
      Json u = Json::array();
      for (const auto& ut : r.inputs) u.push_back(json_io::to_json(ut));
      infeasible["u"] = u;
      break;
    }
    if (eps == 0.0 && !base_cost) base_cost = r.cost;
    const auto vtrain = validate_plan(sys, x0, r.inputs, train, target, gamma);
    std::optional<ValidationReport> vtest;
    if (!test.empty()) vtest = validate_plan(sys, x0, r.inputs, test, target, gamma);

    const double rel = base_cost && *base_cost > 0.0 ? r.cost / *base_cost - 1.0
                                                     : std::numeric_limits<double>::quiet_NaN();
    costs.row_strings({fmt(eps), to_string(r.status), fmt(r.cost), fmt(rel), fmt(r.worst_case_cvar),
                       fmt(r.certificate.lambda), fmt(vtrain.empirical_cvar), fmt(vtrain.fraction_in_target),
                       vtest ? fmt(vtest->empirical_cvar) : "", vtest ? fmt(vtest->fraction_in_target) : ""});
    const auto dump_states = [&](const char* split, const Matrix& xs) {
      for (Eigen::Index i = 0; i < xs.cols(); ++i) {
        std::vector<std::string> row{fmt(eps), split, std::to_string(i)};
        for (Eigen::Index d = 0; d < xs.rows(); ++d) row.push_back(fmt(xs(d, i)));
        terminal.row_strings(row);
      }
    };
    dump_states("train", vtrain.terminal_states);
    if (vtest) dump_states("test", vtest->terminal_states);
    Json u = Json::array();
    for (std::size_t t = 0; t < r.inputs.size(); ++t) {
      u.push_back(json_io::to_json(r.inputs[t]));
      std::vector<std::string> row{fmt(eps), std::to_string(t)};
      for (Eigen::Index d = 0; d < r.inputs[t].size(); ++d) row.push_back(fmt(r.inputs[t](d)));
      inputs.row_strings(row);
    }
    Json entry{{"eps", eps},
               {"status", to_string(r.status)},
               {"cost", r.cost},
               {"u", u},
               {"certificate", cert},
               {"worst_case_cvar", r.worst_case_cvar},
               {"warnings", r.warnings},
               {"train", {{"empirical_cvar", vtrain.empirical_cvar}, {"fraction_in_target", vtrain.fraction_in_target}}}};
    if (vtest) {
      entry["test"] = {{"empirical_cvar", vtest->empirical_cvar}, {"fraction_in_target", vtest->fraction_in_target}};
    }
    plans.push_back(entry);
  }

  RunOutput out;
  if (!infeasible.is_null()) {
    Json c = header(sc);
    c["infeasible"] = infeasible;
    out.exit_code = kExitInfeasible;
    out.message = "plan infeasible at eps = " + fmt(infeasible["eps"].get<double>());
    out.files["certificate.json"] = dump(c);
    return out;
  }
  Json res = header(sc);
  res["gamma"] = gamma;
  res["horizon"] = horizon;
  res["train_samples"] = train.size();
  res["test_samples"] = test.size();
  res["plans"] = plans;
  out.files["result.json"] = dump(res);
  out.files["costs.csv"] = costs.str();
  out.files["terminal_states.csv"] = terminal.str();
  out.files["inputs.csv"] = inputs.str();
  return out;
}

RunOutput run_document(const Json& sc, const Overrides& ov);

inline RunOutput run_demo(const Json& sc, const Overrides& ov) {
  const auto& subs = json_io::field(sc, "scenarios", "demo");
  if (!subs.is_object() || subs.empty()) throw SchemaError("demo.scenarios: expected a non-empty object");
  RunOutput out;
  Json index = header(sc);
  index["runs"] = Json::object();
  for (const auto& [name, sub] : subs.items()) {
    if (name.empty() || name.find('/') != std::string::npos || name.find("..") != std::string::npos) {
      throw SchemaError("demo.scenarios: invalid name '" + name + "'");
    }
    if (json_io::has(sub, "kind") && sub["kind"] == "demo") throw SchemaError("demo: nested demo scenarios");
    auto r = run_document(sub, ov);
    index["runs"][name] = r.exit_code;
    if (r.exit_code != kExitOk) {
      r.message = name + ": " + r.message;
      std::map<std::string, std::string> files;
      for (auto& [file, content] : r.files) files[name + "/" + file] = std::move(content);
      r.files = std::move(files);
      return r;
    }
    for (auto& [file, content] : r.files) out.files[name + "/" + file] = std::move(content);
  }
  out.files["result.json"] = dump(index);
  return out;
}

}  // namespace scenario

/// Runs one scenario document (overrides already applied).
inline RunOutput scenario::run_document(const Json& sc, const Overrides& ov) {
  RunOutput out;
  try {
    const auto kind = json_io::text(json_io::field(sc, "kind", "scenario"), "scenario.kind");
    if (kind == "discrepancy") return run_discrepancy(sc);
    if (kind == "propagate") return run_propagate(sc, ov);
    if (kind == "plan") return run_plan(sc);
    if (kind == "consensus") return run_consensus(sc);
    if (kind == "ols") return run_ols(sc, ov);
    if (kind == "demo") return run_demo(sc, ov);
    throw SchemaError("scenario.kind: unknown kind '" + kind + "'");
  } catch (const SchemaError& e) {
    out = {kExitSchema, {}, e.what()};
  } catch (const nlohmann::json::exception& e) {
    out = {kExitSchema, {}, e.what()};
  } catch (const DimensionMismatch& e) {
    out = {kExitSchema, {}, e.what()};
  } catch (const PreconditionError& e) {
    out = {kExitSchema, {}, e.what()};
  } catch (const AtomBudgetExceeded& e) {
    out = {kExitNumerical, {}, e.what()};
  } catch (const NumericalFailure& e) {
    out = {kExitNumerical, {}, e.what()};
  } catch (const std::exception& e) {
    out = {kExitNumerical, {}, e.what()};
  }
  return out;
}

/// Parses scenario text, applies overrides and runs it.
inline RunOutput run_scenario_text(const std::string& text, const Overrides& ov = {}) {
  Json doc;
  try {
    doc = scenario::apply_overrides(Json::parse(text), ov);
  } catch (const nlohmann::json::exception& e) {
    return {kExitSchema, {}, std::string("malformed scenario: ") + e.what()};
  } catch (const SchemaError& e) {
    return {kExitSchema, {}, e.what()};
  }
  return scenario::run_document(doc, ov);
}

inline RunOutput run_scenario_file(const std::filesystem::path& path, const Overrides& ov = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {kExitSchema, {}, "cannot read " + path.string()};
  std::ostringstream ss;
  ss << in.rdbuf();
  return run_scenario_text(ss.str(), ov);
}

/// Writes every file of `out` below `dir`.
inline void write_outputs(const std::filesystem::path& dir, const RunOutput& out) {
  for (const auto& [name, content] : out.files) {
    const auto path = dir / name;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
  }
}

}  // namespace otprop
