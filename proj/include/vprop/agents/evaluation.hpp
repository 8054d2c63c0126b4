#pragma once

#include <vector>

#include "vprop/agents/replay.hpp"

namespace vprop {

struct EvalResult {
  double mean = 0.0;  // mean discounted return averaged over agents
  double se = 0.0;    // standard error of the Monte-Carlo mean
  bool has_exact = false;
  double exact = 0.0;  // exact value under the start distribution (tabular envs)
};

/// Monte-Carlo evaluation with sampled actions; tabular environments with at
/// most 4096 joint actions also get the exact value. With monte_carlo=false
/// and an exact value available, mean is the exact value and se is 0.
EvalResult eval_policy(MultiAgentEnv& env, const JointPolicy& policy, int n_episodes, double gamma, Rng& rng,
                       bool monte_carlo = true);

/// Exact per-state value of a tabular environment under `policy`.
Eigen::VectorXd exact_values(const MultiAgentEnv& env, const JointPolicy& policy, double gamma);

struct Disagreement {
  double max_pairwise = 0.0;
  double mean_pairwise = 0.0;
};

Disagreement consensus_disagreement(const std::vector<const ParamVector*>& value_nets,
                                    const std::vector<Eigen::VectorXd>& probe_inputs);

/// max - min over probe inputs of the agent-averaged value.
double probe_value_range(const std::vector<const ParamVector*>& value_nets, const std::vector<Eigen::VectorXd>& probe_inputs);

}  // namespace vprop
