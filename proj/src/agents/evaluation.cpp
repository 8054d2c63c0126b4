#include "vprop/agents/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vprop/envs/random_mdp.hpp"

namespace vprop {

Eigen::VectorXd exact_values(const MultiAgentEnv& env, const JointPolicy& policy, double gamma) {
  const TabularModel* m = env.tabular();
  if (!m) throw std::invalid_argument("environment has no tabular model");
  const int n = env.n_agents();
  std::vector<Eigen::MatrixXd> tables(n, Eigen::MatrixXd(m->n_states, env.n_actions()));
  for (int s = 0; s < m->n_states; ++s) {
    RawState raw{static_cast<double>(s)};
    for (int i = 0; i < n; ++i) tables[i].row(s) = policy.probs(env, raw, i).transpose();
  }
  return exact_policy_eval(*m, tables, env.n_actions(), gamma);
}

EvalResult eval_policy(MultiAgentEnv& env, const JointPolicy& policy, int n_episodes, double gamma, Rng& rng,
                       bool monte_carlo) {
  if (n_episodes < 1) throw std::invalid_argument("need at least one evaluation episode");
  const TabularModel* m = env.tabular();
  const bool exact_ok = m && m->n_joint <= 4096;
  if (!monte_carlo && exact_ok) {
    EvalResult out;
    out.has_exact = true;
    out.exact = env.start_distribution().dot(exact_values(env, policy, gamma));
    out.mean = out.exact;
    return out;
  }
  const int n = env.n_agents();
  std::vector<double> returns;
  returns.reserve(n_episodes);
  for (int e = 0; e < n_episodes; ++e) {
    Trajectory tr = collect_episode(env, policy, rng);
    double ret = 0.0, disc = 1.0;
    for (int t = 0; t < tr.length(); ++t) {
      double r = 0.0;
      for (double x : tr.rewards[t]) r += x;
      ret += disc * r / n;
      disc *= gamma;
    }
    returns.push_back(ret);
  }
  EvalResult out;
  double sum = 0.0;
  for (double r : returns) sum += r;
  out.mean = sum / n_episodes;
  if (n_episodes > 1) {
    double ss = 0.0;
    for (double r : returns) ss += (r - out.mean) * (r - out.mean);
    out.se = std::sqrt(ss / (n_episodes - 1) / n_episodes);
  }
  if (exact_ok) {
    out.has_exact = true;
    out.exact = env.start_distribution().dot(exact_values(env, policy, gamma));
  }
  return out;
}

Disagreement consensus_disagreement(const std::vector<const ParamVector*>& value_nets,
                                    const std::vector<Eigen::VectorXd>& probe_inputs) {
  if (value_nets.size() < 2) throw std::invalid_argument("disagreement needs at least two agents");
  if (probe_inputs.empty()) throw std::invalid_argument("need at least one probe state");
  const std::size_t n = value_nets.size();
  Disagreement d;
  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> v(n);
  for (const auto& x : probe_inputs) {
    for (std::size_t i = 0; i < n; ++i) v[i] = forward(*value_nets[i], x)(0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) {
        const double gap = std::abs(v[i] - v[j]);
        d.max_pairwise = std::max(d.max_pairwise, gap);
        total += gap;
        ++count;
      }
  }
  d.mean_pairwise = total / static_cast<double>(count);
  return d;
}

double probe_value_range(const std::vector<const ParamVector*>& value_nets, const std::vector<Eigen::VectorXd>& probe_inputs) {
  if (value_nets.empty() || probe_inputs.empty()) throw std::invalid_argument("need value nets and probe states");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& x : probe_inputs) {
    double mean = 0.0;
    for (const auto* net : value_nets) mean += forward(*net, x)(0);
    mean /= static_cast<double>(value_nets.size());
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
  }
  return hi - lo;
}

}  // namespace vprop
