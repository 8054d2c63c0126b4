#pragma once

#include <cstdint>
#include <vector>

#include "vprop/comm_graph.hpp"
#include "vprop/envs/env.hpp"

namespace vprop {

struct NavConfig {
  int n_agents = 8;
  double region = 2.0;  // side of the square [0, region]^2
  double step_size = 0.1;
  double move_prob = 0.95;
  double reach_radius = 0.1;
  double reach_reward = 5.0;
  double collision_radius = 0.1;
  double collision_penalty = -1.0;
  int max_steps = 500;

  void validate() const;
};

enum NavAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };
inline constexpr int kNavActions = 5;

struct NavState {
  std::vector<Eigen::Vector2d> agents;
  std::vector<Eigen::Vector2d> landmarks;  // landmark i belongs to agent i
  std::vector<bool> reached;
  int step_count = 0;
  bool done = false;
};

/// Uniform random placement of agents and landmarks.
NavState nav_new(const NavConfig& cfg, std::uint64_t seed);

struct NavStepResult {
  std::vector<double> rewards;
  bool done = false;
};

/// Advances `state` in place.
NavStepResult nav_step(NavState& state, const NavConfig& cfg, const std::vector<int>& joint_action, Rng& rng);

enum class ObservationMode { full, partial };

/// full: every agent position, then the own landmark (2N + 2 floats).
/// partial: own position, own landmark, then sorted neighbour positions,
/// zero-padded up to the graph's maximum degree.
Eigen::VectorXd nav_observe(const NavState& state, int agent, const CommGraph& graph, ObservationMode mode);

int nav_observation_dim(int n_agents, const CommGraph& graph, ObservationMode mode);

/// Landmarks are fixed by the instance seed; agent start positions are
/// redrawn on every reset.
/// Raw state layout: [x_0, y_0, ..., x_{N-1}, y_{N-1}, reached_0..reached_{N-1}, step_count].
class NavigationEnv : public MultiAgentEnv {
 public:
  NavigationEnv(NavConfig cfg, CommGraph graph, ObservationMode mode, std::uint64_t instance_seed);

  int n_agents() const override { return cfg_.n_agents; }
  int n_actions() const override { return kNavActions; }
  int critic_dim() const override { return 3 * cfg_.n_agents; }
  int actor_dim() const override { return nav_observation_dim(cfg_.n_agents, graph_, mode_); }
  int horizon() const override { return cfg_.max_steps; }

  RawState reset(Rng& rng) override;
  StepResult step(const std::vector<int>& joint_action, Rng& rng) override;

  Eigen::VectorXd critic_features(const RawState& s) const override;
  Eigen::VectorXd actor_features(const RawState& s, int agent) const override;

  const NavState& state() const { return state_; }
  const NavConfig& config() const { return cfg_; }

  RawState encode(const NavState& s) const;
  NavState decode(const RawState& raw) const;

 private:
  NavConfig cfg_;
  CommGraph graph_;
  ObservationMode mode_;
  std::vector<Eigen::Vector2d> landmarks_;
  NavState state_;
};

}  // namespace vprop
