#include "vprop/tabular.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "vprop/errors.hpp"

namespace vprop {

void TabularModel::validate() const {
  if (n_states < 1 || n_joint < 1) throw std::invalid_argument("tabular model needs states and actions");
  if (P.size() != static_cast<std::size_t>(n_states) * n_joint * n_states)
    throw std::invalid_argument("transition table has wrong size");
  if (Rbar.size() != static_cast<std::size_t>(n_states) * n_joint) throw std::invalid_argument("reward table has wrong size");
}

Eigen::MatrixXd backup_q(const TabularModel& m, const Eigen::VectorXd& V, double gamma) {
  if (V.size() != m.n_states) throw std::invalid_argument("value vector does not match state count");
  Eigen::MatrixXd Q(m.n_states, m.n_joint);
  for (int s = 0; s < m.n_states; ++s)
    for (int a = 0; a < m.n_joint; ++a) {
      const double* row = m.row(s, a);
      double ev = 0.0;
      for (int s2 = 0; s2 < m.n_states; ++s2) ev += row[s2] * V(s2);
      Q(s, a) = m.r(s, a) + gamma * ev;
    }
  return Q;
}

namespace {

double soft_max_row(const Eigen::MatrixXd& Q, int s, double lambda) {
  const double mx = Q.row(s).maxCoeff();
  if (lambda == 0.0) return mx;
  double acc = 0.0;
  for (int a = 0; a < Q.cols(); ++a) acc += std::exp((Q(s, a) - mx) / lambda);
  return mx + lambda * std::log(acc);
}

}  // namespace

Eigen::VectorXd soft_bellman_apply(const TabularModel& m, const Eigen::VectorXd& V, double gamma, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  Eigen::MatrixXd Q = backup_q(m, V, gamma);
  Eigen::VectorXd out(m.n_states);
  for (int s = 0; s < m.n_states; ++s) out(s) = soft_max_row(Q, s, lambda);
  return out;
}

TabularSoftSolution soft_value_iteration(const TabularModel& m, double gamma, double lambda, double tol,
                                         int max_sweeps) {
  m.validate();
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  TabularSoftSolution sol;
  Eigen::VectorXd V = Eigen::VectorXd::Zero(m.n_states);
  for (int it = 0; it < max_sweeps; ++it) {
    Eigen::VectorXd next = soft_bellman_apply(m, V, gamma, lambda);
    const double diff = (next - V).cwiseAbs().maxCoeff();
    V = std::move(next);
    sol.sweep_diffs.push_back(diff);
    sol.sweeps = it + 1;
    if (diff < tol) break;
  }

  Eigen::MatrixXd Q = backup_q(m, V, gamma);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  sol.log_pi = Eigen::MatrixXd::Constant(m.n_states, m.n_joint, neg_inf);
  sol.pi = Eigen::MatrixXd::Zero(m.n_states, m.n_joint);
  for (int s = 0; s < m.n_states; ++s) {
    if (lambda == 0.0) {
      int best = 0;
      for (int a = 1; a < m.n_joint; ++a)
        if (Q(s, a) > Q(s, best)) best = a;
      sol.log_pi(s, best) = 0.0;
      sol.pi(s, best) = 1.0;
    } else {
      const double lse = soft_max_row(Q, s, lambda);
      for (int a = 0; a < m.n_joint; ++a) {
        sol.log_pi(s, a) = (Q(s, a) - lse) / lambda;
        sol.pi(s, a) = std::exp(sol.log_pi(s, a));
      }
    }
  }
  sol.V = V;
  sol.residual = consistency_residual(V, sol.log_pi, m, gamma, lambda);
  return sol;
}

double consistency_residual(const Eigen::VectorXd& V, const Eigen::MatrixXd& log_pi, const TabularModel& m,
                            double gamma, double lambda) {
  if (log_pi.rows() != m.n_states || log_pi.cols() != m.n_joint)
    throw std::invalid_argument("policy table does not match model");
  Eigen::MatrixXd Q = backup_q(m, V, gamma);
  double worst = 0.0;
  for (int s = 0; s < m.n_states; ++s)
    for (int a = 0; a < m.n_joint; ++a) {
      if (!std::isfinite(log_pi(s, a))) continue;
      worst = std::max(worst, std::abs(V(s) - Q(s, a) + lambda * log_pi(s, a)));
    }
  return worst;
}

Eigen::MatrixXd joint_log_policy(const std::vector<Eigen::MatrixXd>& agent_log_pi, int actions_per_agent) {
  if (agent_log_pi.empty()) throw std::invalid_argument("need at least one agent policy");
  const int n = static_cast<int>(agent_log_pi.size());
  const int S = static_cast<int>(agent_log_pi.front().rows());
  int joint = 1;
  for (int i = 0; i < n; ++i) joint *= actions_per_agent;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(S, joint);
  for (int a = 0; a < joint; ++a) {
    int rest = a;
    for (int i = 0; i < n; ++i) {
      const int ai = rest % actions_per_agent;
      rest /= actions_per_agent;
      out.col(a) += agent_log_pi[i].col(ai);
    }
  }
  return out;
}

Eigen::VectorXd exact_policy_eval(const TabularModel& m, const std::vector<Eigen::MatrixXd>& agent_pi,
                                  int actions_per_agent, double gamma) {
  m.validate();
  if (m.n_joint > 4096)
    throw CapacityError("exact policy evaluation supports at most 4096 joint actions; use Monte-Carlo evaluation");
  const int n = static_cast<int>(agent_pi.size());
  int joint = 1;
  for (int i = 0; i < n; ++i) joint *= actions_per_agent;
  if (joint != m.n_joint) throw std::invalid_argument("policies do not match joint action count");
  for (const auto& t : agent_pi)
    if (t.rows() != m.n_states || t.cols() != actions_per_agent) throw std::invalid_argument("policy table shape mismatch");

  const int S = m.n_states;
  Eigen::MatrixXd Ppi = Eigen::MatrixXd::Zero(S, S);
  Eigen::VectorXd Rpi = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < joint; ++a) {
      double w = 1.0;
      int rest = a;
      for (int i = 0; i < n; ++i) {
        w *= agent_pi[i](s, rest % actions_per_agent);
        rest /= actions_per_agent;
      }
      if (w == 0.0) continue;
      Rpi(s) += w * m.r(s, a);
      const double* row = m.row(s, a);
      for (int s2 = 0; s2 < S; ++s2) Ppi(s, s2) += w * row[s2];
    }
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(S, S) - gamma * Ppi;
  return lhs.partialPivLu().solve(Rpi);
}

}  // namespace vprop
