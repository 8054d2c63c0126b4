#include "vprop/envs/random_mdp.hpp"

#include <stdexcept>
#include <string>

#include "vprop/errors.hpp"

namespace vprop {

int RandomMdp::joint_index(const std::vector<int>& actions) const {
  if (static_cast<int>(actions.size()) != n_agents) throw std::invalid_argument("joint action has wrong agent count");
  int idx = 0, scale = 1;
  for (int i = 0; i < n_agents; ++i) {
    if (actions[i] < 0 || actions[i] >= actions_per_agent) throw std::invalid_argument("action index out of range");
    idx += actions[i] * scale;
    scale *= actions_per_agent;
  }
  return idx;
}

std::vector<int> RandomMdp::split_joint(int joint) const {
  std::vector<int> a(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    a[i] = joint % actions_per_agent;
    joint /= actions_per_agent;
  }
  return a;
}

TabularModel RandomMdp::averaged_model() const {
  TabularModel m;
  m.n_states = n_states;
  m.n_joint = n_joint;
  m.P = P;
  m.Rbar.assign(static_cast<std::size_t>(n_states) * n_joint, 0.0);
  for (std::size_t k = 0; k < m.Rbar.size(); ++k) {
    double s = 0.0;
    for (int i = 0; i < n_agents; ++i) s += R[i][k];
    m.Rbar[k] = s / n_agents;
  }
  return m;
}

RandomMdp random_mdp_new(std::uint64_t seed, int n_states, int n_agents, int actions_per_agent) {
  if (n_states < 2) throw std::invalid_argument("random MDP needs at least 2 states");
  if (n_agents < 1) throw std::invalid_argument("random MDP needs at least one agent");
  if (actions_per_agent < 1) throw std::invalid_argument("actions_per_agent must be positive");
  double joint = 1.0;
  for (int i = 0; i < n_agents; ++i) joint *= actions_per_agent;
  if (joint * n_states * n_states > 1e8)
    throw CapacityError("transition table would hold " + std::to_string(joint * n_states * n_states) +
                        " entries (limit 1e8)");
  RandomMdp mdp;
  mdp.n_states = n_states;
  mdp.n_agents = n_agents;
  mdp.actions_per_agent = actions_per_agent;
  mdp.n_joint = static_cast<int>(joint);
  Rng rng(seed);
  const std::size_t rows = static_cast<std::size_t>(n_states) * mdp.n_joint;
  mdp.P.resize(rows * n_states);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    double* row = &mdp.P[r * n_states];
    for (int s2 = 0; s2 < n_states; ++s2) {
      row[s2] = rng.uniform() + 1e-5;
      sum += row[s2];
    }
    for (int s2 = 0; s2 < n_states; ++s2) row[s2] /= sum;
  }
  mdp.R.assign(n_agents, std::vector<double>(rows));
  for (int i = 0; i < n_agents; ++i)
    for (std::size_t r = 0; r < rows; ++r) mdp.R[i][r] = rng.uniform(0.0, 4.0);
  return mdp;
}

MdpStep mdp_step(const RandomMdp& mdp, int state, const std::vector<int>& joint_action, Rng& rng) {
  if (state < 0 || state >= mdp.n_states) throw std::invalid_argument("state index out of range");
  const int a = mdp.joint_index(joint_action);
  const double u = rng.uniform();
  const double* row = &mdp.P[(static_cast<std::size_t>(state) * mdp.n_joint + a) * mdp.n_states];
  double acc = 0.0;
  int next = mdp.n_states - 1;
  for (int s2 = 0; s2 < mdp.n_states; ++s2) {
    acc += row[s2];
    if (u < acc) {
      next = s2;
      break;
    }
  }
  MdpStep out;
  out.next_state = next;
  out.rewards.resize(mdp.n_agents);
  for (int i = 0; i < mdp.n_agents; ++i) out.rewards[i] = mdp.reward(i, state, a);
  return out;
}

Eigen::VectorXd exact_policy_eval(const RandomMdp& mdp, const std::vector<Eigen::MatrixXd>& agent_pi, double gamma) {
  if (mdp.n_joint > 4096)
    throw CapacityError("exact policy evaluation supports at most 4096 joint actions; use Monte-Carlo evaluation");
  return exact_policy_eval(mdp.averaged_model(), agent_pi, mdp.actions_per_agent, gamma);
}

RandomMdpEnv::RandomMdpEnv(RandomMdp mdp, int episode_len) : mdp_(std::move(mdp)), episode_len_(episode_len) {
  if (episode_len < 1) throw std::invalid_argument("episode length must be positive");
  model_ = mdp_.averaged_model();
}

RawState RandomMdpEnv::reset(Rng& rng) {
  state_ = static_cast<int>(rng.index(mdp_.n_states));
  t_ = 0;
  done_ = false;
  return {static_cast<double>(state_)};
}

StepResult RandomMdpEnv::step(const std::vector<int>& joint_action, Rng& rng) {
  if (done_) throw InvalidState("episode has ended; call reset first");
  MdpStep s = mdp_step(mdp_, state_, joint_action, rng);
  state_ = s.next_state;
  ++t_;
  done_ = t_ >= episode_len_;
  return StepResult{{static_cast<double>(state_)}, std::move(s.rewards), done_};
}

Eigen::VectorXd RandomMdpEnv::critic_features(const RawState& s) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(mdp_.n_states);
  x(state_index(s)) = 1.0;
  return x;
}

Eigen::VectorXd RandomMdpEnv::actor_features(const RawState& s, int) const { return critic_features(s); }

Eigen::VectorXd RandomMdpEnv::start_distribution() const {
  return Eigen::VectorXd::Constant(mdp_.n_states, 1.0 / mdp_.n_states);
}

}  // namespace vprop
