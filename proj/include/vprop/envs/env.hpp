#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vprop/rng.hpp"
#include "vprop/tabular.hpp"

namespace vprop {

/// Raw environment state as a flat vector; each environment documents its
/// own layout. Trajectories keep raw states and featurize on demand.
using RawState = std::vector<double>;

struct StepResult {
  RawState next;
  std::vector<double> rewards;
  bool done = false;
};

/// Synchronous multi-agent environment: all agents act, then the world moves.
class MultiAgentEnv {
 public:
  virtual ~MultiAgentEnv() = default;

  virtual int n_agents() const = 0;
  virtual int n_actions() const = 0;  // per agent
  virtual int critic_dim() const = 0;
  virtual int actor_dim() const = 0;
  virtual int horizon() const = 0;  // maximum episode length

  virtual RawState reset(Rng& rng) = 0;
  virtual StepResult step(const std::vector<int>& joint_action, Rng& rng) = 0;

  /// Value-net input; identical for every agent.
  virtual Eigen::VectorXd critic_features(const RawState& s) const = 0;
  virtual Eigen::VectorXd actor_features(const RawState& s, int agent) const = 0;

  /// Explicit model for exact evaluation, or nullptr.
  virtual const TabularModel* tabular() const { return nullptr; }
  /// Start-state distribution over tabular states (only with tabular()).
  virtual Eigen::VectorXd start_distribution() const { return {}; }
  /// Tabular state index of a raw state (only with tabular()).
  virtual int state_index(const RawState&) const { return -1; }
};

}  // namespace vprop
