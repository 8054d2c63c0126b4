#pragma once

#include "vprop/agents/trainer.hpp"

namespace vprop {

/// Greedy (ties to the lowest action) or epsilon-greedy action choice from
/// per-agent action-value nets over the critic input.
class GreedyQPolicies : public JointPolicy {
 public:
  GreedyQPolicies(std::vector<const ParamVector*> qs, double epsilon) : qs_(std::move(qs)), epsilon_(epsilon) {}
  Eigen::VectorXd probs(const MultiAgentEnv& env, const RawState& s, int agent) const override;

 private:
  std::vector<const ParamVector*> qs_;
  double epsilon_;
};

/// Linear exploration schedule: 1.0 at the first iteration down to 0.05 at
/// half the budget, constant afterwards.
double iql_epsilon(int iter, int iterations);

/// Independent Q-learning: each agent fits Q_i(s, a_i) to its own reward with
/// one-step targets from a frozen copy refreshed every 100 updates. Each
/// outer iteration runs dual_steps + 1 updates so the gradient budget matches
/// the value-propagation trainer. Evaluation is greedy.
TrainResult train_independent_q(MultiAgentEnv& env, const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace vprop
