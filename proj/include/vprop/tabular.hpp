#pragma once

#include <vector>

#include <Eigen/Dense>

namespace vprop {

/// Explicit model of a finite MDP over joint actions with the agent-averaged
/// reward. Joint action index = sum_i a_i * A^i (agent 0 least significant).
struct TabularModel {
  int n_states = 0;
  int n_joint = 0;
  std::vector<double> P;     // [(s * n_joint + a) * n_states + s']
  std::vector<double> Rbar;  // [s * n_joint + a]

  double p(int s, int a, int s2) const { return P[(static_cast<std::size_t>(s) * n_joint + a) * n_states + s2]; }
  double r(int s, int a) const { return Rbar[static_cast<std::size_t>(s) * n_joint + a]; }
  const double* row(int s, int a) const { return &P[(static_cast<std::size_t>(s) * n_joint + a) * n_states]; }
  void validate() const;
};

/// (R + gamma * P V) laid out n_states x n_joint.
Eigen::MatrixXd backup_q(const TabularModel& m, const Eigen::VectorXd& V, double gamma);

/// One entropy-regularized Bellman backup: lambda * logsumexp(Q / lambda), or
/// the hard max when lambda == 0.
Eigen::VectorXd soft_bellman_apply(const TabularModel& m, const Eigen::VectorXd& V, double gamma, double lambda);

struct TabularSoftSolution {
  Eigen::VectorXd V;
  Eigen::MatrixXd log_pi;  // n_states x n_joint; -inf outside the support
  Eigen::MatrixXd pi;
  double residual = 0.0;
  int sweeps = 0;
  std::vector<double> sweep_diffs;  // sup-norm change per sweep
};

/// Iterates the backup to a sup-norm change below tol. With lambda == 0 the
/// policy is greedy with ties going to the lowest joint index.
TabularSoftSolution soft_value_iteration(const TabularModel& m, double gamma, double lambda, double tol,
                                         int max_sweeps = 100000);

/// max over (s, a) with pi(s, a) > 0 of |V(s) - Rbar - gamma E V(s') + lambda log pi(s, a)|.
double consistency_residual(const Eigen::VectorXd& V, const Eigen::MatrixXd& log_pi, const TabularModel& m,
                            double gamma, double lambda);

/// Joint log-policy from per-agent tables: agent_log_pi[i](s, a_i).
Eigen::MatrixXd joint_log_policy(const std::vector<Eigen::MatrixXd>& agent_log_pi, int actions_per_agent);

/// Solves (I - gamma P_pi) V = Rbar_pi for the product policy built from the
/// per-agent probability tables agent_pi[i](s, a_i).
Eigen::VectorXd exact_policy_eval(const TabularModel& m, const std::vector<Eigen::MatrixXd>& agent_pi,
                                  int actions_per_agent, double gamma);

}  // namespace vprop
