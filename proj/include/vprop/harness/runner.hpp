#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vprop/harness/config.hpp"
#include "vprop/testbed.hpp"

namespace vprop {

struct RunSummary {
  ExperimentConfig config;
  std::string hash;
  TrainResult train;                  // learning runs
  std::optional<TestbedRun> testbed;  // optimizer testbed runs
  int graph_repair_edges = 0;
  std::string out_dir;
};

/// Runs one experiment. With a non-empty out_dir it writes manifest.json,
/// train_log.csv, summary.json, graph.json, periodic snapshot_<iter>.json
/// files and (testbed only) trace.csv.
RunSummary run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

/// One run per seed in out_dir/seed_<s>, fanned out over `jobs` threads.
std::vector<RunSummary> run_seeds(const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds,
                                  const std::string& out_dir, int jobs);

nlohmann::json make_manifest(const ExperimentConfig& cfg, const std::vector<std::string>& outputs);

/// Evaluates a stored snapshot on the environment described by `env_cfg`.
EvalResult eval_snapshot(const std::string& snapshot_path, const ExperimentConfig& env_cfg);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace vprop
