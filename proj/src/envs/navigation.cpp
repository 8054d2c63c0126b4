#include "vprop/envs/navigation.hpp"

#include <algorithm>
#include <stdexcept>

#include "vprop/errors.hpp"

namespace vprop {

void NavConfig::validate() const {
  if (n_agents < 1) throw std::invalid_argument("navigation needs at least one agent");
  if (!(region > 0.0) || !(step_size > 0.0)) throw std::invalid_argument("region and step size must be positive");
  if (!(move_prob >= 0.0 && move_prob <= 1.0)) throw std::invalid_argument("move_prob must lie in [0, 1]");
  if (!(reach_radius > 0.0) || !(collision_radius >= 0.0)) throw std::invalid_argument("radii must be positive");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be positive");
}

NavState nav_new(const NavConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  NavState s;
  for (int i = 0; i < cfg.n_agents; ++i) s.agents.emplace_back(rng.uniform(0.0, cfg.region), rng.uniform(0.0, cfg.region));
  for (int i = 0; i < cfg.n_agents; ++i)
    s.landmarks.emplace_back(rng.uniform(0.0, cfg.region), rng.uniform(0.0, cfg.region));
  s.reached.assign(cfg.n_agents, false);
  return s;
}

NavStepResult nav_step(NavState& state, const NavConfig& cfg, const std::vector<int>& joint_action, Rng& rng) {
  const int n = static_cast<int>(state.agents.size());
  if (state.done || state.step_count >= cfg.max_steps) throw InvalidState("episode has ended; call reset first");
  if (static_cast<int>(joint_action.size()) != n) throw std::invalid_argument("joint action has wrong agent count");
  for (int a : joint_action)
    if (a < 0 || a >= kNavActions) throw std::invalid_argument("navigation action out of range");

  static const double dx[kNavActions] = {0.0, 0.0, -1.0, 1.0, 0.0};
  static const double dy[kNavActions] = {1.0, -1.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    int a = joint_action[i];
    if (rng.uniform() >= cfg.move_prob) {
      // Slip: one of the other four actions, uniformly.
      int k = static_cast<int>(rng.index(kNavActions - 1));
      a = k < a ? k : k + 1;
    }
    Eigen::Vector2d& p = state.agents[i];
    p.x() = std::clamp(p.x() + cfg.step_size * dx[a], 0.0, cfg.region);
    p.y() = std::clamp(p.y() + cfg.step_size * dy[a], 0.0, cfg.region);
  }

  NavStepResult out;
  out.rewards.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (!state.reached[i] && (state.agents[i] - state.landmarks[i]).norm() < cfg.reach_radius) {
      state.reached[i] = true;
      out.rewards[i] += cfg.reach_reward;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if ((state.agents[i] - state.agents[j]).norm() < cfg.collision_radius) {
        out.rewards[i] += cfg.collision_penalty;
        out.rewards[j] += cfg.collision_penalty;
      }
  ++state.step_count;
  const bool all = std::all_of(state.reached.begin(), state.reached.end(), [](bool b) { return b; });
  state.done = all || state.step_count >= cfg.max_steps;
  out.done = state.done;
  return out;
}

int nav_observation_dim(int n_agents, const CommGraph& graph, ObservationMode mode) {
  if (mode == ObservationMode::full) return 2 * n_agents + 2;
  return 4 + 2 * graph.max_degree();
}

Eigen::VectorXd nav_observe(const NavState& state, int agent, const CommGraph& graph, ObservationMode mode) {
  const int n = static_cast<int>(state.agents.size());
  if (agent < 0 || agent >= n) throw std::invalid_argument("agent index out of range");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(nav_observation_dim(n, graph, mode));
  if (mode == ObservationMode::full) {
    for (int j = 0; j < n; ++j) x.segment<2>(2 * j) = state.agents[j];
    x.segment<2>(2 * n) = state.landmarks[agent];
    return x;
  }
  if (graph.n_agents != n) throw std::invalid_argument("graph does not match agent count");
  x.segment<2>(0) = state.agents[agent];
  x.segment<2>(2) = state.landmarks[agent];
  const auto nb = graph.neighbors();
  int slot = 0;
  for (int j : nb[agent]) x.segment<2>(4 + 2 * slot++) = state.agents[j];
  return x;
}

NavigationEnv::NavigationEnv(NavConfig cfg, CommGraph graph, ObservationMode mode, std::uint64_t instance_seed)
    : cfg_(cfg), graph_(std::move(graph)), mode_(mode) {
  cfg_.validate();
  if (graph_.n_agents != cfg_.n_agents) throw std::invalid_argument("graph does not match agent count");
  landmarks_ = nav_new(cfg_, instance_seed).landmarks;
}

RawState NavigationEnv::encode(const NavState& s) const {
  const int n = cfg_.n_agents;
  RawState raw(3 * n + 1);
  for (int i = 0; i < n; ++i) {
    raw[2 * i] = s.agents[i].x();
    raw[2 * i + 1] = s.agents[i].y();
    raw[2 * n + i] = s.reached[i] ? 1.0 : 0.0;
  }
  raw[3 * n] = s.step_count;
  return raw;
}

NavState NavigationEnv::decode(const RawState& raw) const {
  const int n = cfg_.n_agents;
  if (static_cast<int>(raw.size()) != 3 * n + 1) throw std::invalid_argument("raw navigation state has wrong length");
  NavState s;
  s.landmarks = landmarks_;
  for (int i = 0; i < n; ++i) {
    s.agents.emplace_back(raw[2 * i], raw[2 * i + 1]);
    s.reached.push_back(raw[2 * n + i] != 0.0);
  }
  s.step_count = static_cast<int>(raw[3 * n]);
  return s;
}

RawState NavigationEnv::reset(Rng& rng) {
  state_ = NavState{};
  state_.landmarks = landmarks_;
  for (int i = 0; i < cfg_.n_agents; ++i)
    state_.agents.emplace_back(rng.uniform(0.0, cfg_.region), rng.uniform(0.0, cfg_.region));
  state_.reached.assign(cfg_.n_agents, false);
  return encode(state_);
}

StepResult NavigationEnv::step(const std::vector<int>& joint_action, Rng& rng) {
  if (state_.agents.empty()) throw InvalidState("environment was never reset");
  NavStepResult r = nav_step(state_, cfg_, joint_action, rng);
  return StepResult{encode(state_), std::move(r.rewards), r.done};
}

Eigen::VectorXd NavigationEnv::critic_features(const RawState& s) const {
  const int n = cfg_.n_agents;
  Eigen::VectorXd x(3 * n);
  for (int k = 0; k < 3 * n; ++k) x(k) = s[k];
  return x;
}

Eigen::VectorXd NavigationEnv::actor_features(const RawState& s, int agent) const {
  return nav_observe(decode(s), agent, graph_, mode_);
}

}  // namespace vprop
