// otprop: command-line front end.
//
//   otprop run [--eps E] [--gamma G] [--horizon T] [--seed S] [--out DIR]
//              [--atom-budget N] scenario.json...
//   otprop discrepancy P.json Q.json [--cost KIND] [--W JSON] [--p P]
//              [--scale S] [--plan plan.csv]

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "otprop/json_io.hpp"
#include "otprop/scenario.hpp"
#include "otprop/transport.hpp"

namespace fs = std::filesystem;
using namespace otprop;

namespace {

int run_command(const std::vector<std::string>& files, const Overrides& ov, const std::string& out_dir) {
  std::set<std::string> stems;
  for (const auto& f : files) {
    if (!stems.insert(fs::path(f).stem().string()).second) {
      std::cerr << "otprop: two scenarios share the name '" << fs::path(f).stem().string() << "'\n";
      return kExitUsage;
    }
  }
  // Scenarios are independent; each one runs sequentially on its own task.
  std::vector<std::future<RunOutput>> jobs;
  for (const auto& f : files) {
    jobs.push_back(std::async(files.size() > 1 ? std::launch::async : std::launch::deferred,
                              [f, ov] { return run_scenario_file(f, ov); }));
  }
  int worst = kExitOk;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const RunOutput r = jobs[i].get();
    const fs::path dir = fs::path(out_dir) / fs::path(files[i]).stem();
    try {
      write_outputs(dir, r);
    } catch (const std::exception& e) {
      std::cerr << "otprop: " << e.what() << "\n";
      worst = std::max(worst, static_cast<int>(kExitUsage));
      continue;
    }
    if (r.exit_code == kExitOk) {
      std::cout << files[i] << ": ok -> " << dir.string() << "\n";
    } else {
      std::cerr << files[i] << ": exit " << r.exit_code << ": " << r.message << "\n";
      if (!r.files.empty()) std::cerr << "  wrote " << (dir / r.files.begin()->first).string() << "\n";
    }
    worst = std::max(worst, r.exit_code);
  }
  return worst;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return Json::parse(ss.str());
}

struct CostFlags {
  std::string kind = "squared_euclidean";
  std::string w;
  double p = 2.0;
  double scale = 1.0;
};

TransportCost cost_from_flags(const CostFlags& f, int dim) {
  if (f.kind == "squared_euclidean") return TransportCost::squared_euclidean(dim);
  if (f.kind == "power") return TransportCost::power(f.p, f.scale);
  if (f.kind == "quadratic") {
    if (f.w.empty()) throw SchemaError("--cost quadratic needs --W");
    return TransportCost::quadratic(json_io::matrix_from(Json::parse(f.w), "--W"));
  }
  throw SchemaError("unknown --cost '" + f.kind + "'");
}

int discrepancy_command(const std::string& fp, const std::string& fq, const CostFlags& flags,
                        const std::string& plan_path) {
  try {
    const auto p = json_io::distribution_from(read_json_file(fp), fp);
    const auto q = json_io::distribution_from(read_json_file(fq), fq);
    const auto cost = cost_from_flags(flags, p.dim());
    const auto r = ot_discrepancy(p, q, cost);
    int nonzero = 0;
    scenario::Csv csv({"i", "j", "mass"});
    for (Eigen::Index i = 0; i < r.plan.gamma.rows(); ++i) {
      for (Eigen::Index j = 0; j < r.plan.gamma.cols(); ++j) {
        if (r.plan.gamma(i, j) > 0.0) {
          csv.row(static_cast<long>(i), static_cast<long>(j), r.plan.gamma(i, j));
          ++nonzero;
        }
      }
    }
    std::printf("%.12g\n", r.value);
    std::printf("plan: %ldx%ld, %d nonzero entries, marginal residual %.3g\n", static_cast<long>(p.size()),
                static_cast<long>(q.size()), nonzero, r.plan.max_marginal_residual());
    if (!plan_path.empty()) {
      std::ofstream out(plan_path, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + plan_path);
      out << csv.str();
    }
    return kExitOk;
  } catch (const SchemaError& e) {
    std::cerr << "otprop: " << e.what() << "\n";
    return kExitSchema;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "otprop: " << e.what() << "\n";
    return kExitSchema;
  } catch (const DimensionMismatch& e) {
    std::cerr << "otprop: " << e.what() << "\n";
    return kExitSchema;
  } catch (const PreconditionError& e) {
    std::cerr << "otprop: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "otprop: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-transport ambiguity set propagation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto* run = app.add_subcommand("run", "Run scenario files");
  std::vector<std::string> files;
  Overrides ov;
  double eps = 0.0, gamma = 0.0;
  int horizon = 0;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  auto* eps_opt = run->add_option("--eps", eps, "Override the ambiguity radius")->check(CLI::NonNegativeNumber);
  auto* gamma_opt = run->add_option("--gamma", gamma, "Override the CVaR level");
  auto* horizon_opt = run->add_option("--horizon", horizon, "Override the horizon")->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed, "Override the random seed");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--atom-budget", ov.atom_budget, "Maximum number of atoms per distribution")
      ->capture_default_str();
  run->add_option("scenarios", files, "Scenario JSON files")->required()->check(CLI::ExistingFile);

  auto* disc = app.add_subcommand("discrepancy", "OT discrepancy between two distribution files");
  std::string fp, fq, plan_path;
  CostFlags cf;
  disc->add_option("P", fp, "First distribution")->required()->check(CLI::ExistingFile);
  disc->add_option("Q", fq, "Second distribution")->required()->check(CLI::ExistingFile);
  disc->add_option("--cost", cf.kind, "squared_euclidean, quadratic or power")->capture_default_str();
  disc->add_option("--W", cf.w, "Quadratic cost matrix as JSON, e.g. [[1,0],[0,2]]");
  disc->add_option("--p", cf.p, "Exponent of the power cost")->capture_default_str();
  disc->add_option("--scale", cf.scale, "Scale of the power cost")->capture_default_str();
  disc->add_option("--plan", plan_path, "Write the optimal coupling to this CSV file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (run->parsed()) {
    if (*eps_opt) ov.eps = eps;
    if (*gamma_opt) ov.gamma = gamma;
    if (*horizon_opt) ov.horizon = horizon;
    if (*seed_opt) ov.seed = seed;
    return run_command(files, ov, out_dir);
  }
  return discrepancy_command(fp, fq, cf, plan_path);
}
