#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vprop/comm_graph.hpp"
#include "vprop/optim.hpp"

namespace vprop {

/// Decentralized least squares: agent i holds f_i(x_i) = 1/2 ||M_i x_i - b_i||^2
/// and all agents must agree on x.
struct LsTestbed {
  int n_agents = 0;
  int dim = 0;
  std::vector<Eigen::MatrixXd> M;
  std::vector<Eigen::VectorXd> b;
  Eigen::VectorXd x_star;  // consensus optimum
  double L = 0.0;          // max_i lambda_max(M_i' M_i)

  double f(const StackedParams& x) const;
  StackedParams grad(const StackedParams& x) const;  // row i = grad f_i(x_i)
  StackedParams optimum() const;                     // x_star in every row
};

LsTestbed make_ls_testbed(int n_agents, int dim, std::uint64_t seed);

/// Penalty constants meeting the descent requirements:
/// c = 6 ||B'B|| / sigma_min and beta the positive root of
/// beta^2 - (2cL + 2c + 1) beta - 6 L^2 / sigma_min = 0.
struct PenaltyChoice {
  double c = 0.0;
  double beta = 0.0;
};

PenaltyChoice choose_penalty(const GraphMatrices& m, double L);

/// Multiplier minimizing ||grad f(x*) + A' mu|| within the range of A.
Eigen::MatrixXd optimal_multiplier(const LsTestbed& tb, const GraphMatrices& m);

struct TraceRow {
  int iteration = 0;
  double q = 0.0;
  double potential = 0.0;
  double disagreement = 0.0;
};

struct TestbedRun {
  std::vector<TraceRow> trace;
  double max_mu_range_violation = 0.0;
  PenaltyChoice penalty;
  StackedParams x_final;
};

/// Runs the proximal primal-dual iteration with exact gradients from x = 0.
/// Row t reports Q(x^{t+1}, mu^t) and the potential at (x^{t+1}, x^t, mu^{t+1}).
TestbedRun run_ls_testbed(const LsTestbed& tb, const CommGraph& g, int iterations);

/// Running minimum of Q over the first t rows.
double min_q(const std::vector<TraceRow>& trace, int t);

std::string trace_to_csv(const std::vector<TraceRow>& trace);

}  // namespace vprop
