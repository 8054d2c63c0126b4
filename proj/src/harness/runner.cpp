#include "vprop/harness/runner.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "vprop/agents/independent_q.hpp"
#include "vprop/errors.hpp"

namespace fs = std::filesystem;

namespace vprop {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

nlohmann::json make_manifest(const ExperimentConfig& cfg, const std::vector<std::string>& outputs) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["config"] = config_to_json(cfg);
  j["seed"] = cfg.train.seed;
  j["config_hash"] = config_hash(cfg);
  j["outputs"] = outputs;
  return j;
}

namespace {

RunSummary run_testbed_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  RunSummary s;
  s.config = cfg;
  s.hash = config_hash(cfg);
  CommGraph g = make_comm_graph(cfg);
  s.graph_repair_edges = g.repair_edges;
  LsTestbed tb = make_ls_testbed(cfg.n_agents, cfg.testbed_dim, cfg.env_seed);
  s.testbed = run_ls_testbed(tb, g, cfg.train.iterations);
  for (const auto& r : s.testbed->trace) {
    TrainLogRow row;
    row.iter = r.iteration + 1;
    row.q_diag = r.q;
    s.train.log.rows.push_back(row);
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(out_dir + "/trace.csv", trace_to_csv(s.testbed->trace));
    write_file(out_dir + "/train_log.csv", s.train.log.to_csv(false));
    write_file(out_dir + "/graph.json", graph_to_json(g));
    nlohmann::json summary;
    summary["format_version"] = 1;
    summary["c"] = s.testbed->penalty.c;
    summary["beta"] = s.testbed->penalty.beta;
    summary["smoothness"] = tb.L;
    summary["max_mu_range_violation"] = s.testbed->max_mu_range_violation;
    write_file(out_dir + "/summary.json", summary.dump(2));
    write_file(out_dir + "/manifest.json",
               make_manifest(cfg, {"trace.csv", "train_log.csv", "graph.json", "summary.json"}).dump(2));
  }
  return s;
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  validate_config(cfg);
  if (cfg.env == EnvKind::testbed) return run_testbed_experiment(cfg, out_dir);
  RunSummary s;
  s.config = cfg;
  s.hash = config_hash(cfg);
  s.out_dir = out_dir;
  CommGraph g = make_comm_graph(cfg);
  s.graph_repair_edges = g.repair_edges;
  auto env = make_env(cfg, g);

  std::vector<std::string> outputs = {"train_log.csv", "summary.json", "graph.json"};
  TrainHooks hooks;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    hooks.snapshot = [&](const Snapshot& snap) {
      const std::string name = "snapshot_" + std::to_string(snap.iter) + ".json";
      write_file(out_dir + "/" + name, snapshot_to_json(snap));
      outputs.push_back(name);
    };
  }
  const CommGraph* gp = cfg.method == Method::value_propagation && cfg.n_agents > 1 ? &g : nullptr;
  s.train = train(*env, gp, cfg.train, cfg.method, hooks);

  if (!out_dir.empty()) {
    write_file(out_dir + "/train_log.csv", s.train.log.to_csv(true));
    write_file(out_dir + "/graph.json", graph_to_json(g));
    nlohmann::json summary;
    summary["format_version"] = 1;
    summary["method"] = to_string(cfg.method);
    summary["final_return"] = s.train.final_return;
    summary["final_disagreement_max"] = s.train.final_disagreement.max_pairwise;
    summary["final_disagreement_mean"] = s.train.final_disagreement.mean_pairwise;
    summary["final_value_range"] = s.train.final_value_range;
    summary["consensus_calls"] = s.train.consensus_calls;
    summary["graph_edges"] = g.n_edges();
    summary["graph_repair_edges"] = g.repair_edges;
    write_file(out_dir + "/summary.json", summary.dump(2));
    write_file(out_dir + "/manifest.json", make_manifest(cfg, outputs).dump(2));
  }
  return s;
}

std::vector<RunSummary> run_seeds(const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds,
                                  const std::string& out_dir, int jobs) {
  std::vector<RunSummary> out(seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        ExperimentConfig cfg = base;
        cfg.train.seed = seeds[i];
        const std::string dir = out_dir.empty() ? "" : out_dir + "/seed_" + std::to_string(seeds[i]);
        out[i] = run_experiment(cfg, dir);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

EvalResult eval_snapshot(const std::string& snapshot_path, const ExperimentConfig& env_cfg) {
  Snapshot snap = snapshot_from_json(read_file(snapshot_path));
  CommGraph g = make_comm_graph(env_cfg);
  auto env = make_env(env_cfg, g);
  if (static_cast<int>(snap.nets.size()) != env->n_agents())
    throw std::invalid_argument("snapshot agent count does not match the environment");
  Rng rng(derive_seed(env_cfg.train.seed, {kStreamEval}));
  std::vector<const ParamVector*> nets;
  if (snap.method == Method::independent_q) {
    for (const auto& a : snap.nets) nets.push_back(&a.v);
    GreedyQPolicies pol(nets, 0.0);
    return eval_policy(*env, pol, env_cfg.train.eval_episodes, env_cfg.train.gamma, rng);
  }
  for (const auto& a : snap.nets) nets.push_back(&a.pi);
  SoftmaxPolicies pol(nets);
  return eval_policy(*env, pol, env_cfg.train.eval_episodes, env_cfg.train.gamma, rng);
}

}  // namespace vprop
