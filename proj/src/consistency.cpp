#include "vprop/consistency.hpp"

#include <cmath>
#include <stdexcept>

namespace vprop {

void Segment::validate() const {
  const int L = length();
  if (L < 1) throw std::invalid_argument("segment must contain at least one step");
  if (static_cast<int>(critic.size()) != L + 1) throw std::invalid_argument("segment needs length+1 critic inputs");
  if (static_cast<int>(actor.size()) != L || static_cast<int>(rewards.size()) != L)
    throw std::invalid_argument("segment step arrays have inconsistent lengths");
  const std::size_t n = actions.front().size();
  for (int t = 0; t < L; ++t)
    if (actions[t].size() != n || rewards[t].size() != n || actor[t].size() != n)
      throw std::invalid_argument("segment agent count changes between steps");
}

void ConsistencyConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
  if (n_agents < 1) throw std::invalid_argument("n_agents must be >= 1");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
}

Learner agent_learner(int agent, const ParamVector& v, const ParamVector& pi, const ParamVector* rho,
                      const ConsistencyConfig& cfg) {
  if (agent < 0 || agent >= cfg.n_agents) throw std::invalid_argument("agent index out of range");
  Learner l;
  l.v = &v;
  l.rho = rho;
  l.pis = {&pi};
  l.owned = {agent};
  l.reward_weights.assign(cfg.n_agents, 0.0);
  l.reward_weights[agent] = 1.0;
  l.entropy_coef = cfg.lambda * cfg.n_agents;
  return l;
}

Learner central_learner(const ParamVector& v, const std::vector<const ParamVector*>& pis, const ParamVector* rho,
                        const ConsistencyConfig& cfg) {
  if (static_cast<int>(pis.size()) != cfg.n_agents) throw std::invalid_argument("need one policy per agent");
  Learner l;
  l.v = &v;
  l.rho = rho;
  l.pis = pis;
  for (int i = 0; i < cfg.n_agents; ++i) l.owned.push_back(i);
  l.reward_weights.assign(cfg.n_agents, 1.0 / cfg.n_agents);
  l.entropy_coef = cfg.lambda;
  return l;
}

Eigen::VectorXd dual_input(const Eigen::VectorXd& critic, const std::vector<int>& joint_action, int n_actions) {
  const int n = static_cast<int>(joint_action.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(critic.size() + n * n_actions);
  x.head(critic.size()) = critic;
  for (int j = 0; j < n; ++j) {
    if (joint_action[j] < 0 || joint_action[j] >= n_actions) throw std::invalid_argument("action index out of range");
    x(critic.size() + j * n_actions + joint_action[j]) = 1.0;
  }
  return x;
}

int dual_action_count(const ParamVector& rho, int critic_dim, int n_agents) {
  const int extra = rho.spec.input_dim() - critic_dim;
  if (extra <= 0 || extra % n_agents != 0) throw std::invalid_argument("dual net input width does not fit state-action input");
  return extra / n_agents;
}

namespace {

void check_learner(const Learner& l, const Segment& seg, const ConsistencyConfig& cfg) {
  if (!l.v) throw std::invalid_argument("learner has no value net");
  if (l.pis.size() != l.owned.size() || l.pis.empty()) throw std::invalid_argument("learner policy list is malformed");
  if (static_cast<int>(l.reward_weights.size()) != seg.n_agents())
    throw std::invalid_argument("reward weights do not match agent count");
  if (seg.n_agents() != cfg.n_agents) throw std::invalid_argument("segment agent count does not match config");
  if (seg.length() > cfg.k) throw std::invalid_argument("segment longer than the configured rollout length");
  if (seg.critic.front().size() != l.v->spec.input_dim()) throw std::invalid_argument("value net input dimension mismatch");
  for (std::size_t q = 0; q < l.pis.size(); ++q) {
    const int j = l.owned[q];
    if (j < 0 || j >= seg.n_agents()) throw std::invalid_argument("owned agent index out of range");
    if (seg.actor.front()[j].size() != l.pis[q]->spec.input_dim())
      throw std::invalid_argument("policy net input dimension mismatch");
  }
}

double step_reward(const Learner& l, const std::vector<double>& r) {
  double s = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) s += l.reward_weights[j] * r[j];
  return s;
}

struct Workspace {
  std::vector<ForwardTape> pi_tapes;  // [t * owned + q]
  std::vector<double> pi_prob;
  ForwardTape v_last, v_first, rho_tape;
};

// Evaluates delta (and caches tapes for the gradient pass).
double delta_with_tapes(const Learner& l, const Segment& seg, const ConsistencyConfig& cfg, Workspace& ws) {
  const int L = seg.length();
  const int Q = static_cast<int>(l.pis.size());
  ws.pi_tapes.resize(static_cast<std::size_t>(L) * Q);
  ws.pi_prob.resize(static_cast<std::size_t>(L) * Q);
  double delta = 0.0;
  double disc = 1.0;
  for (int t = 0; t < L; ++t) {
    double logp = 0.0;
    for (int q = 0; q < Q; ++q) {
      const int j = l.owned[q];
      const int a = seg.actions[t][j];
      if (a < 0 || a >= l.pis[q]->spec.output_dim()) throw std::invalid_argument("action index out of range");
      ForwardTape& tape = ws.pi_tapes[t * Q + q];
      forward(*l.pis[q], seg.actor[t][j], tape);
      ws.pi_prob[t * Q + q] = tape.output(a);
      logp += std::log(tape.output(a));
    }
    delta += disc * (step_reward(l, seg.rewards[t]) - l.entropy_coef * logp);
    disc *= cfg.gamma;
  }
  delta += disc * forward(*l.v, seg.critic[L], ws.v_last)(0);
  return delta;
}

}  // namespace

double segment_delta(const Learner& learner, const Segment& seg, const ConsistencyConfig& cfg) {
  seg.validate();
  check_learner(learner, seg, cfg);
  Workspace ws;
  return delta_with_tapes(learner, seg, cfg, ws);
}

double delta_i(int agent, const ParamVector& v, const ParamVector& pi, const Segment& transition,
               const ConsistencyConfig& cfg) {
  if (transition.length() != 1) throw std::invalid_argument("delta_i expects a one-step transition");
  return segment_delta(agent_learner(agent, v, pi, nullptr, cfg), transition, cfg);
}

double delta_i_multistep(int agent, const ParamVector& v, const ParamVector& pi, const Segment& seg,
                         const ConsistencyConfig& cfg) {
  return segment_delta(agent_learner(agent, v, pi, nullptr, cfg), seg, cfg);
}

LossParts segment_loss(const Learner& learner, const Segment& seg, const ConsistencyConfig& cfg) {
  const double delta = segment_delta(learner, seg, cfg);
  LossParts out;
  const double v0 = forward(*learner.v, seg.critic[0])(0);
  out.primal = (delta - v0) * (delta - v0);
  if (cfg.eta > 0.0) {
    if (!learner.rho) throw std::invalid_argument("dual weight is positive but no dual net was given");
    const int na = dual_action_count(*learner.rho, static_cast<int>(seg.critic[0].size()), seg.n_agents());
    const double r0 = forward(*learner.rho, dual_input(seg.critic[0], seg.actions[0], na))(0);
    out.dual = -cfg.eta * (delta - r0) * (delta - r0);
  }
  return out;
}

LossParts local_loss_i(int agent, const ParamVector& v, const ParamVector& pi, const ParamVector* rho,
                       const Segment& seg, const ConsistencyConfig& cfg) {
  return segment_loss(agent_learner(agent, v, pi, rho, cfg), seg, cfg);
}

LearnerGrads learner_grads(const Learner& l, const std::vector<const Segment*>& batch, const ConsistencyConfig& cfg,
                           GradRequest request) {
  if (batch.empty()) throw std::invalid_argument("minibatch is empty");
  const bool use_dual = cfg.eta > 0.0;
  if (use_dual && !l.rho) throw std::invalid_argument("dual weight is positive but no dual net was given");
  const bool need_v0 = request.v || request.pi;
  const int Q = static_cast<int>(l.pis.size());

  LearnerGrads out;
  if (request.v) out.g_v = Eigen::VectorXd::Zero(l.v->spec.n_params());
  if (request.pi)
    for (const auto* p : l.pis) out.g_pi.push_back(Eigen::VectorXd::Zero(p->spec.n_params()));
  if (request.rho && l.rho) out.g_rho = Eigen::VectorXd::Zero(l.rho->spec.n_params());

  const double inv_m = 1.0 / static_cast<double>(batch.size());
  Workspace ws;
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  for (const Segment* seg : batch) {
    check_learner(l, *seg, cfg);
    const int L = seg->length();
    const double delta = delta_with_tapes(l, *seg, cfg, ws);

    double v0 = 0.0;
    if (need_v0) {
      v0 = forward(*l.v, seg->critic[0], ws.v_first)(0);
      out.loss.primal += inv_m * (delta - v0) * (delta - v0);
    }
    double r0 = 0.0;
    if (use_dual) {
      const int na = dual_action_count(*l.rho, static_cast<int>(seg->critic[0].size()), seg->n_agents());
      r0 = forward(*l.rho, dual_input(seg->critic[0], seg->actions[0], na), ws.rho_tape)(0);
      out.loss.dual += -inv_m * cfg.eta * (delta - r0) * (delta - r0);
    }

    const double d_delta = 2.0 * (delta - v0) - (use_dual ? 2.0 * cfg.eta * (delta - r0) : 0.0);
    if (request.v) {
      double disc_last = 1.0;
      for (int t = 0; t < L; ++t) disc_last *= cfg.gamma;
      backward_accumulate(*l.v, ws.v_last, one, inv_m * d_delta * disc_last, out.g_v);
      backward_accumulate(*l.v, ws.v_first, one, -inv_m * 2.0 * (delta - v0), out.g_v);
    }
    if (request.pi) {
      double disc = 1.0;
      for (int t = 0; t < L; ++t) {
        for (int q = 0; q < Q; ++q) {
          const int j = l.owned[q];
          const int a = seg->actions[t][j];
          Eigen::VectorXd g = Eigen::VectorXd::Zero(l.pis[q]->spec.output_dim());
          g(a) = 1.0 / ws.pi_prob[t * Q + q];
          backward_accumulate(*l.pis[q], ws.pi_tapes[t * Q + q], g, -inv_m * d_delta * l.entropy_coef * disc,
                              out.g_pi[q]);
        }
        disc *= cfg.gamma;
      }
    }
    if (request.rho && use_dual)
      backward_accumulate(*l.rho, ws.rho_tape, one, inv_m * 2.0 * cfg.eta * (delta - r0), out.g_rho);
  }
  return out;
}

LearnerGrads local_grads_i(int agent, const ParamVector& v, const ParamVector& pi, const ParamVector* rho,
                           const std::vector<const Segment*>& batch, const ConsistencyConfig& cfg) {
  return learner_grads(agent_learner(agent, v, pi, rho, cfg), batch, cfg);
}

}  // namespace vprop
