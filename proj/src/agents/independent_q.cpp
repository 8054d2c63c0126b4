#include "vprop/agents/independent_q.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <stdexcept>

namespace vprop {

namespace {

constexpr double kEpsilonStart = 1.0;
constexpr double kEpsilonEnd = 0.05;
constexpr int kTargetRefresh = 100;

int argmax_low(const Eigen::VectorXd& q) {
  int best = 0;
  for (int a = 1; a < q.size(); ++a)
    if (q(a) > q(best)) best = a;
  return best;
}

}  // namespace

Eigen::VectorXd GreedyQPolicies::probs(const MultiAgentEnv& env, const RawState& s, int agent) const {
  const Eigen::VectorXd q = forward(*qs_.at(agent), env.critic_features(s));
  const int A = static_cast<int>(q.size());
  Eigen::VectorXd p = Eigen::VectorXd::Constant(A, epsilon_ / A);
  p(argmax_low(q)) += 1.0 - epsilon_;
  return p;
}

double iql_epsilon(int iter, int iterations) {
  const double half = std::max(1.0, 0.5 * iterations);
  const double frac = std::min(1.0, iter / half);
  return kEpsilonStart + (kEpsilonEnd - kEpsilonStart) * frac;
}

TrainResult train_independent_q(MultiAgentEnv& env, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const int N = env.n_agents();
  const int A = env.n_actions();
  const int batch = cfg.effective_batch();

  MlpSpec qspec;
  qspec.widths.push_back(env.critic_dim());
  for (int h : cfg.v_hidden) qspec.widths.push_back(h);
  qspec.widths.push_back(A);
  qspec.validate();

  std::vector<ParamVector> qs, targets;
  std::vector<AdamState> adam;
  for (int i = 0; i < N; ++i) {
    qs.push_back(init_params(qspec, derive_seed(cfg.seed, {kStreamInitQ, static_cast<std::uint64_t>(i)})));
    adam.push_back(make_adam_state(qspec.n_params(), cfg.alpha_v, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps));
  }
  targets = qs;

  Rng collect_rng(derive_seed(cfg.seed, {kStreamCollect}));
  Rng sample_rng(derive_seed(cfg.seed, {kStreamSamplePrimal}));
  ReplayBuffer buffer(cfg.replay_capacity);
  TrainResult result;
  result.method = Method::independent_q;
  result.probe_inputs = probe_inputs(env, cfg);

  auto q_ptrs = [&] {
    std::vector<const ParamVector*> p;
    for (const auto& x : qs) p.push_back(&x);
    return p;
  };
  auto agent_nets = [&] {
    std::vector<AgentNets> out;
    for (const auto& q : qs) out.push_back(AgentNets{q, ParamVector{}, ParamVector{}});
    return out;
  };

  long updates = 0;
  ForwardTape tape;
  for (int t = 0; t < cfg.iterations; ++t) {
    {
      GreedyQPolicies behaviour(q_ptrs(), iql_epsilon(t, cfg.iterations));
      auto traj = std::make_shared<const Trajectory>(collect_episode(env, behaviour, collect_rng));
      for (auto& ref : episode_windows(traj, 1)) buffer.add(std::move(ref));
    }
    double loss = 0.0;
    const int n_updates = cfg.dual_steps + 1;
    for (int u = 0; u < n_updates; ++u) {
      std::vector<Segment> segs;
      for (std::size_t idx : buffer.sample_indices(batch, sample_rng)) segs.push_back(materialize(buffer.at(idx), env));
      const double inv_m = 1.0 / segs.size();
      for (int i = 0; i < N; ++i) {
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(qspec.n_params());
        for (const auto& seg : segs) {
          const double boot = forward(targets[i], seg.critic[1]).maxCoeff();
          const double y = seg.rewards[0][i] + cfg.gamma * boot;
          const Eigen::VectorXd q = forward(qs[i], seg.critic[0], tape);
          const int a = seg.actions[0][i];
          const double err = q(a) - y;
          if (u + 1 == n_updates) loss += inv_m * err * err / N;
          Eigen::VectorXd og = Eigen::VectorXd::Zero(A);
          og(a) = 1.0;
          backward_accumulate(qs[i], tape, og, 2.0 * err * inv_m, grad);
        }
        qs[i].values = adam_step(qs[i].values, grad, adam[i]);
      }
      if (++updates % kTargetRefresh == 0) targets = qs;
    }

    const bool last = t + 1 == cfg.iterations;
    if ((t + 1) % cfg.eval_every == 0 || last) {
      TrainLogRow row;
      row.iter = t + 1;
      GreedyQPolicies greedy(q_ptrs(), 0.0);
      Rng eval_rng(derive_seed(cfg.seed, {kStreamEval, static_cast<std::uint64_t>(t + 1)}));
      EvalResult ev = eval_policy(env, greedy, cfg.eval_episodes, cfg.gamma, eval_rng, false);
      row.return_mean = ev.mean;
      row.return_se = ev.se;
      row.loss_primal = loss;
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
      result.log.rows.push_back(row);
    }
    if (hooks.snapshot && ((t + 1) % (10 * cfg.eval_every) == 0 || last))
      hooks.snapshot(Snapshot{Method::independent_q, t + 1, agent_nets()});
    if (hooks.after_iteration) hooks.after_iteration(t + 1, agent_nets());
  }
  result.nets = agent_nets();
  result.final_return = result.log.rows.back().return_mean;
  return result;
}

}  // namespace vprop
