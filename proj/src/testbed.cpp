#include "vprop/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "vprop/rng.hpp"

namespace vprop {

double LsTestbed::f(const StackedParams& x) const {
  double s = 0.0;
  for (int i = 0; i < n_agents; ++i) s += 0.5 * (M[i] * x.row(i).transpose() - b[i]).squaredNorm();
  return s;
}

StackedParams LsTestbed::grad(const StackedParams& x) const {
  StackedParams g(n_agents, dim);
  for (int i = 0; i < n_agents; ++i) g.row(i) = (M[i].transpose() * (M[i] * x.row(i).transpose() - b[i])).transpose();
  return g;
}

StackedParams LsTestbed::optimum() const { return x_star.transpose().replicate(n_agents, 1); }

namespace {

Eigen::MatrixXd random_orthogonal(int n, Rng& rng) {
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

LsTestbed make_ls_testbed(int n_agents, int dim, std::uint64_t seed) {
  if (n_agents < 2) throw std::invalid_argument("testbed needs at least two agents");
  if (dim < 1) throw std::invalid_argument("testbed dimension must be positive");
  Rng rng(seed);
  LsTestbed tb;
  tb.n_agents = n_agents;
  tb.dim = dim;
  // Singular values in [0.5, 1]: condition number at most 2, curvature at most 1.
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < n_agents; ++i) {
    Eigen::MatrixXd U = random_orthogonal(dim, rng);
    Eigen::MatrixXd V = random_orthogonal(dim, rng);
    Eigen::VectorXd s(dim);
    for (int k = 0; k < dim; ++k) s(k) = rng.uniform(0.5, 1.0);
    Eigen::MatrixXd Mi = U * s.asDiagonal() * V.transpose();
    Eigen::VectorXd bi(dim);
    for (int k = 0; k < dim; ++k) bi(k) = rng.normal();
    H += Mi.transpose() * Mi;
    c += Mi.transpose() * bi;
    tb.L = std::max(tb.L, s.cwiseAbs2().maxCoeff());
    tb.M.push_back(std::move(Mi));
    tb.b.push_back(std::move(bi));
  }
  tb.x_star = H.ldlt().solve(c);
  return tb;
}

PenaltyChoice choose_penalty(const GraphMatrices& m, double L) {
  if (!(m.sigma_min > 0.0)) throw std::invalid_argument("graph must be connected");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.Lplus, Eigen::EigenvaluesOnly);
  const double bb_norm = es.eigenvalues().maxCoeff();
  PenaltyChoice p;
  p.c = 6.0 * bb_norm / m.sigma_min;
  const double lin = 2.0 * p.c * L + 2.0 * p.c + 1.0;
  p.beta = 0.5 * (lin + std::sqrt(lin * lin + 24.0 * L * L / m.sigma_min));
  return p;
}

Eigen::MatrixXd optimal_multiplier(const LsTestbed& tb, const GraphMatrices& m) {
  // Solve A' mu = -grad f(x*) in the least-squares sense; the minimum-norm
  // solution lies in the range of A.
  StackedParams g = tb.grad(tb.optimum());
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m.A.transpose());
  return cod.solve(-g);
}

TestbedRun run_ls_testbed(const LsTestbed& tb, const CommGraph& g, int iterations) {
  if (g.n_agents != tb.n_agents) throw std::invalid_argument("graph size does not match testbed");
  GraphMatrices m = build_matrices(g);
  TestbedRun run;
  run.penalty = choose_penalty(m, tb.L);
  const double beta = run.penalty.beta;
  ConsensusState state = make_consensus_state(m, tb.dim, 1.0 / beta);
  StackedParams x = StackedParams::Zero(tb.n_agents, tb.dim);
  for (int t = 0; t < iterations; ++t) {
    StackedParams gx = tb.grad(x);
    Eigen::MatrixXd mu_before = state.mu;
    StackedParams next = proxpda_step(x, gx, state, m, Direction::descent);
    TraceRow row;
    row.iteration = t;
    row.q = q_criterion(next, mu_before, tb.grad(next), m, beta).q_value;
    row.potential = potential(next, x, state.mu, run.penalty.c, beta, tb.f(next), m);
    row.disagreement = disagreement(next);
    run.trace.push_back(row);
    run.max_mu_range_violation = std::max(run.max_mu_range_violation, mu_range_violation(state.mu, m));
    x = std::move(next);
  }
  run.x_final = x;
  return run;
}

double min_q(const std::vector<TraceRow>& trace, int t) {
  if (t < 1 || t > static_cast<int>(trace.size())) throw std::invalid_argument("trace prefix out of range");
  double best = trace[0].q;
  for (int i = 1; i < t; ++i) best = std::min(best, trace[i].q);
  return best;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
  std::string out = "iteration,q,potential,disagreement\n";
  char buf[128];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.iteration, r.q, r.potential, r.disagreement);
    out += buf;
  }
  return out;
}

}  // namespace vprop
