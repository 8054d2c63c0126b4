#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vprop/agents/evaluation.hpp"
#include "vprop/agents/replay.hpp"
#include "vprop/comm_graph.hpp"
#include "vprop/optim.hpp"

namespace vprop {

enum class Variant { proxpda, accel };
enum class Method { value_propagation, centralized, no_comm, independent_q };

const char* to_string(Variant v);
const char* to_string(Method m);
Variant parse_variant(const std::string& s);
Method parse_method(const std::string& s);

struct TrainConfig {
  double gamma = 0.9;
  double lambda = 0.01;
  double eta = 0.01;
  int k = 1;
  int iterations = 1000;
  int dual_steps = 10;
  int batch_size = 32;
  bool theory_batch = false;  // use ceil(sqrt(iterations)) instead of batch_size
  double alpha_v = 5e-4;
  double alpha_pi = 5e-4;
  double alpha_rho = 5e-4;
  Variant variant = Variant::accel;
  std::uint64_t seed = 0;
  int eval_every = 100;
  int eval_episodes = 10;
  int probe_state_count = 20;
  int replay_capacity = 100000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::vector<int> v_hidden = {20, 20};
  std::vector<int> pi_hidden = {32};
  std::vector<int> rho_hidden = {20, 20};

  void validate() const;
  int effective_batch() const;
};

/// RNG stream identifiers; every stream is derived from the master seed.
enum Stream : std::uint64_t {
  kStreamInitV = 1,
  kStreamInitPi = 2,
  kStreamInitRho = 3,
  kStreamCollect = 4,
  kStreamSampleDual = 5,
  kStreamSamplePrimal = 6,
  kStreamEval = 7,
  kStreamProbe = 8,
  kStreamInitQ = 9,
};

struct AgentNets {
  ParamVector v;
  ParamVector pi;
  ParamVector rho;
};

/// Snapshot of every agent's nets. Independent-Q snapshots keep the
/// action-value net in `v` and leave `pi`/`rho` empty.
struct Snapshot {
  Method method = Method::value_propagation;
  int iter = 0;
  std::vector<AgentNets> nets;
};

struct TrainLogRow {
  int iter = 0;
  double return_mean = 0.0;
  double return_se = 0.0;
  double v_disagree_max = 0.0;
  double v_disagree_mean = 0.0;
  double loss_primal = 0.0;
  double loss_dual = 0.0;
  double q_diag = 0.0;
  double wall_ms = 0.0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;

  std::string to_csv(bool include_wall = true) const;
  static TrainLog from_csv(const std::string& text);
};

struct TrainResult {
  Method method = Method::value_propagation;
  /// One entry per agent. The single-critic baseline repeats its value and
  /// dual nets in every entry.
  std::vector<AgentNets> nets;
  TrainLog log;
  long consensus_calls = 0;
  std::vector<Eigen::VectorXd> probe_inputs;
  Disagreement final_disagreement;
  double final_value_range = 0.0;
  double final_return = 0.0;
};

struct TrainHooks {
  /// Called at the end and every 10 * eval_every iterations.
  std::function<void(const Snapshot&)> snapshot;
  /// Called after every outer iteration (tests use it to watch parameters).
  std::function<void(int iter, const std::vector<AgentNets>&)> after_iteration;
};

/// Value propagation, the single-critic baseline and the no-communication
/// baseline share one engine. `graph` is required (and must be connected)
/// for value propagation with more than one agent and ignored otherwise.
TrainResult train(MultiAgentEnv& env, const CommGraph* graph, const TrainConfig& cfg, Method method,
                  const TrainHooks& hooks = {});

TrainResult train_value_propagation(MultiAgentEnv& env, const CommGraph& graph, const TrainConfig& cfg,
                                    const TrainHooks& hooks = {});
TrainResult train_centralized_pcl(MultiAgentEnv& env, const TrainConfig& cfg, const TrainHooks& hooks = {});
TrainResult train_no_comm_pcl(MultiAgentEnv& env, const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Probe inputs for the disagreement metric, drawn from the start
/// distribution with the probe stream.
std::vector<Eigen::VectorXd> probe_inputs(MultiAgentEnv& env, const TrainConfig& cfg);

std::string snapshot_to_json(const Snapshot& snap);
Snapshot snapshot_from_json(const std::string& text);

}  // namespace vprop
