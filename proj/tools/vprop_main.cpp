// Command-line front end: train, eval, verify, report, schema.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vprop/errors.hpp"
#include "vprop/harness/config.hpp"
#include "vprop/harness/report.hpp"
#include "vprop/harness/runner.hpp"
#include "vprop/harness/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

vprop::ExperimentConfig base_config(const std::string& target) {
  for (const auto& name : vprop::preset_names())
    if (name == target) return vprop::preset_config(name);
  if (std::filesystem::exists(target)) return vprop::load_config(target);
  throw vprop::ConfigError("preset", "'" + target + "' is neither a preset nor a config file");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized multi-agent value propagation toolkit"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Run a training experiment");
  std::string target, out_dir, variant, method;
  std::optional<std::uint64_t> seed;
  std::optional<double> eta;
  std::optional<int> agents;
  std::vector<std::uint64_t> seeds;
  bool partial = false, theory_batch = false;
  int jobs = 1;
  train->add_option("target", target, "Preset name or config/manifest file")->required();
  train->add_option("--seed", seed, "Master seed");
  train->add_option("--seeds", seeds, "Several seeds, one run directory each");
  train->add_option("--jobs", jobs, "Threads for --seeds")->check(CLI::PositiveNumber);
  train->add_option("--out", out_dir, "Output directory");
  train->add_option("--variant", variant, "proxpda or accel")->check(CLI::IsMember({"proxpda", "accel"}));
  train->add_option("--method", method, "value_propagation, centralized, no_comm or independent_q")
      ->check(CLI::IsMember({"value_propagation", "centralized", "no_comm", "independent_q"}));
  train->add_option("--eta", eta, "Dual weight in [0, 1]");
  train->add_option("--agents", agents, "Number of agents");
  train->add_flag("--partial", partial, "Actors observe only themselves and their neighbours");
  train->add_flag("--theory-batch", theory_batch, "Minibatch size ceil(sqrt(iterations))");

  auto* eval = app.add_subcommand("eval", "Evaluate a snapshot");
  std::string snapshot, env_cfg;
  eval->add_option("snapshot", snapshot, "Snapshot JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("env-config", env_cfg, "Preset name or config/manifest describing the environment")->required();

  auto* verify = app.add_subcommand("verify", "Run built-in verification suites");
  std::string suite = "all";
  verify->add_option("--suite", suite, "graph, grad, consensus, rate, oracle or all")
      ->check(CLI::IsMember({"graph", "grad", "consensus", "rate", "oracle", "all"}));

  auto* rep = app.add_subcommand("report", "Emit plot-ready CSV for a run directory");
  std::string run_dir;
  rep->add_option("run-dir", run_dir, "Run directory")->required();

  auto* schema = app.add_subcommand("schema", "Print every config key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) {
      vprop::ExperimentConfig cfg = base_config(target);
      if (seed) cfg.train.seed = *seed;
      if (!variant.empty()) cfg.train.variant = vprop::parse_variant(variant);
      if (!method.empty()) cfg.method = vprop::parse_method(method);
      if (eta) cfg.train.eta = *eta;
      if (agents) cfg.n_agents = *agents;
      if (partial) cfg.observation = vprop::ObservationMode::partial;
      if (theory_batch) cfg.train.theory_batch = true;
      cfg.nav.n_agents = cfg.n_agents;
      vprop::validate_config(cfg);
      if (out_dir.empty()) out_dir = "runs/" + vprop::config_hash(cfg).substr(0, 12);
      if (!seeds.empty()) {
        auto runs = vprop::run_seeds(cfg, seeds, out_dir, jobs);
        for (const auto& r : runs)
          std::printf("seed %llu: final return %.6g\n", static_cast<unsigned long long>(r.config.train.seed),
                      r.train.final_return);
      } else {
        auto r = vprop::run_experiment(cfg, out_dir);
        if (r.testbed) {
          std::printf("testbed: %zu iterations, final Q %.6g\n", r.testbed->trace.size(), r.testbed->trace.back().q);
        } else {
          std::printf("final return %.6g, value disagreement %.6g (range %.6g)\n", r.train.final_return,
                      r.train.final_disagreement.max_pairwise, r.train.final_value_range);
        }
      }
      std::printf("wrote %s\n", out_dir.c_str());
      return kExitOk;
    }
    if (*eval) {
      vprop::EvalResult r = vprop::eval_snapshot(snapshot, base_config(env_cfg));
      std::printf("return %.6g +/- %.6g", r.mean, r.se);
      if (r.has_exact) std::printf(" (exact %.6g)", r.exact);
      std::printf("\n");
      return kExitOk;
    }
    if (*verify) return vprop::run_verify(suite, std::cout) ? kExitOk : kExitFail;
    if (*rep) {
      for (const auto& p : vprop::report(run_dir)) std::printf("wrote %s\n", p.c_str());
      return kExitOk;
    }
    if (*schema) {
      std::cout << vprop::config_schema().dump(2) << '\n';
      return kExitOk;
    }
  } catch (const vprop::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
