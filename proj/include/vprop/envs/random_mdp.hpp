#pragma once

#include <cstdint>
#include <vector>

#include "vprop/envs/env.hpp"
#include "vprop/tabular.hpp"

namespace vprop {

/// Random multi-agent MDP: P(s'|s,a) proportional to U[0,1] + 1e-5 and
/// independent per-agent rewards R_i(s,a) ~ U[0,4] over joint actions.
struct RandomMdp {
  int n_states = 0;
  int n_agents = 0;
  int actions_per_agent = 0;
  int n_joint = 0;
  std::vector<double> P;                // [(s * n_joint + a) * n_states + s']
  std::vector<std::vector<double>> R;   // R[i][s * n_joint + a]

  double p(int s, int a, int s2) const { return P[(static_cast<std::size_t>(s) * n_joint + a) * n_states + s2]; }
  double reward(int agent, int s, int a) const { return R[agent][static_cast<std::size_t>(s) * n_joint + a]; }
  int joint_index(const std::vector<int>& actions) const;
  std::vector<int> split_joint(int joint) const;

  /// Model with the agent-averaged reward.
  TabularModel averaged_model() const;
};

RandomMdp random_mdp_new(std::uint64_t seed, int n_states, int n_agents, int actions_per_agent);

struct MdpStep {
  int next_state = 0;
  std::vector<double> rewards;
};

MdpStep mdp_step(const RandomMdp& mdp, int state, const std::vector<int>& joint_action, Rng& rng);

/// Exact discounted value of the agent-averaged reward under the product of
/// per-agent tabular policies agent_pi[i](s, a_i).
Eigen::VectorXd exact_policy_eval(const RandomMdp& mdp, const std::vector<Eigen::MatrixXd>& agent_pi, double gamma);

/// Episodic wrapper: uniform start state, fixed episode length. States are
/// one-hot encoded for both critic and actor inputs.
/// Raw state layout: [state index].
class RandomMdpEnv : public MultiAgentEnv {
 public:
  RandomMdpEnv(RandomMdp mdp, int episode_len);

  int n_agents() const override { return mdp_.n_agents; }
  int n_actions() const override { return mdp_.actions_per_agent; }
  int critic_dim() const override { return mdp_.n_states; }
  int actor_dim() const override { return mdp_.n_states; }
  int horizon() const override { return episode_len_; }

  RawState reset(Rng& rng) override;
  StepResult step(const std::vector<int>& joint_action, Rng& rng) override;

  Eigen::VectorXd critic_features(const RawState& s) const override;
  Eigen::VectorXd actor_features(const RawState& s, int agent) const override;

  const TabularModel* tabular() const override { return &model_; }
  Eigen::VectorXd start_distribution() const override;
  int state_index(const RawState& s) const override { return static_cast<int>(s.at(0)); }

  const RandomMdp& mdp() const { return mdp_; }

 private:
  RandomMdp mdp_;
  TabularModel model_;
  int episode_len_;
  int state_ = -1;
  int t_ = 0;
  bool done_ = true;
};

}  // namespace vprop
