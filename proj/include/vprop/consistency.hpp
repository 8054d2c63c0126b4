#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vprop/neural.hpp"

namespace vprop {

/// A window of experience already mapped to network inputs. A one-step
/// transition is a segment of length 1.
///
/// critic[t] is the value-net input at step t (t = 0..length); actor[t][j]
/// is agent j's policy input; actions[t][j] and rewards[t][j] are per agent.
struct Segment {
  std::vector<Eigen::VectorXd> critic;
  std::vector<std::vector<Eigen::VectorXd>> actor;
  std::vector<std::vector<int>> actions;
  std::vector<std::vector<double>> rewards;

  int length() const { return static_cast<int>(actions.size()); }
  int n_agents() const { return actions.empty() ? 0 : static_cast<int>(actions.front().size()); }
  void validate() const;
};

struct ConsistencyConfig {
  double gamma = 0.9;
  double lambda = 0.01;
  double eta = 0.01;
  int n_agents = 1;
  int k = 1;

  void validate() const;
};

/// The nets one learner owns. `pis` lists the policies whose log-probabilities
/// enter the residual; pis[q] acts for agent owned[q].
struct Learner {
  const ParamVector* v = nullptr;
  const ParamVector* rho = nullptr;
  std::vector<const ParamVector*> pis;
  std::vector<int> owned;
  std::vector<double> reward_weights;  // per agent, applied to the reward row
  double entropy_coef = 0.0;
};

/// Learner of one value-propagation agent: own reward, own policy, entropy
/// weight lambda * N.
Learner agent_learner(int agent, const ParamVector& v, const ParamVector& pi, const ParamVector* rho,
                      const ConsistencyConfig& cfg);

/// Learner of the single-critic baseline: averaged reward, every policy,
/// entropy weight lambda.
Learner central_learner(const ParamVector& v, const std::vector<const ParamVector*>& pis, const ParamVector* rho,
                        const ConsistencyConfig& cfg);

/// Input of the dual net: critic input followed by one one-hot block per agent.
Eigen::VectorXd dual_input(const Eigen::VectorXd& critic, const std::vector<int>& joint_action, int n_actions);

/// Infers the per-agent action count from a dual net's input width.
int dual_action_count(const ParamVector& rho, int critic_dim, int n_agents);

double segment_delta(const Learner& learner, const Segment& seg, const ConsistencyConfig& cfg);

double delta_i(int agent, const ParamVector& v, const ParamVector& pi, const Segment& transition,
               const ConsistencyConfig& cfg);
double delta_i_multistep(int agent, const ParamVector& v, const ParamVector& pi, const Segment& seg,
                         const ConsistencyConfig& cfg);

struct LossParts {
  double primal = 0.0;
  double dual = 0.0;
  double total() const { return primal + dual; }
};

LossParts segment_loss(const Learner& learner, const Segment& seg, const ConsistencyConfig& cfg);
LossParts local_loss_i(int agent, const ParamVector& v, const ParamVector& pi, const ParamVector* rho,
                       const Segment& seg, const ConsistencyConfig& cfg);

struct GradRequest {
  bool v = true;
  bool pi = true;
  bool rho = true;
};

struct LearnerGrads {
  Eigen::VectorXd g_v;
  std::vector<Eigen::VectorXd> g_pi;  // aligned with Learner::pis
  Eigen::VectorXd g_rho;              // gradient of the dual term (to be ascended)
  LossParts loss;                     // minibatch means
};

/// Minibatch-mean gradients. g_v and g_pi differentiate primal + dual; g_rho
/// differentiates the dual term alone. Both V(s_0) and the bootstrap V(s_L)
/// are differentiated.
LearnerGrads learner_grads(const Learner& learner, const std::vector<const Segment*>& batch,
                           const ConsistencyConfig& cfg, GradRequest request = {});

LearnerGrads local_grads_i(int agent, const ParamVector& v, const ParamVector& pi, const ParamVector* rho,
                           const std::vector<const Segment*>& batch, const ConsistencyConfig& cfg);

}  // namespace vprop
