#include <doctest.h>

#include <cmath>

#include "vprop/optim.hpp"
#include "vprop/rng.hpp"
#include "vprop/testbed.hpp"

using namespace vprop;

namespace {

GraphMatrices edge_matrices() { return build_matrices(make_graph(2, {{1, 0}})); }

Eigen::MatrixXd random_matrix(int r, int c, Rng& rng) {
  Eigen::MatrixXd x(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_CASE("proximal primal-dual step on a single edge") {
  GraphMatrices m = edge_matrices();
  ConsensusState st = make_consensus_state(m, 3, 0.1);
  StackedParams theta(2, 3);
  theta << 0.3, -1.0, 2.0, 0.3, -1.0, 2.0;
  StackedParams next = proxpda_step(theta, StackedParams::Zero(2, 3), st, m, Direction::descent);
  CHECK(next == theta);
  CHECK(st.mu.isZero(0));

  ConsensusState st2 = make_consensus_state(m, 1, 0.1);
  StackedParams split(2, 1);
  split << 1.0, 0.0;
  next = proxpda_step(split, StackedParams::Zero(2, 1), st2, m, Direction::descent);
  CHECK(next(0, 0) == 0.5);
  CHECK(next(1, 0) == 0.5);
}

TEST_CASE("descent and ascent differ only in the gradient sign") {
  Rng rng(1);
  GraphMatrices m = build_matrices(random_graph(6, 0.5, 2));
  StackedParams theta = random_matrix(6, 4, rng), g = random_matrix(6, 4, rng);
  ConsensusState a = make_consensus_state(m, 4, 0.2), d = a;
  a.mu = d.mu = random_matrix(m.A.rows(), 4, rng);
  StackedParams up = proxpda_step(theta, g, a, m, Direction::ascent);
  StackedParams down = proxpda_step(theta, g, d, m, Direction::descent);
  Eigen::MatrixXd expected = 0.2 * m.degree.cwiseInverse().asDiagonal() * g;
  CHECK((up - down - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("proximal step rejects a zero-degree node") {
  CommGraph g = make_graph_unchecked(3, {{1, 0}});
  GraphMatrices m = build_matrices(g);
  ConsensusState st = make_consensus_state(m, 1, 0.1);
  CHECK_THROWS_AS(proxpda_step(StackedParams::Zero(3, 1), StackedParams::Zero(3, 1), st, m, Direction::descent),
                  std::invalid_argument);
}

TEST_CASE("consensus is a fixed point of both consensus updates") {
  Rng rng(5);
  CommGraph g = random_graph(7, 0.4, 9);
  GraphMatrices m = build_matrices(g);
  Eigen::RowVectorXd row = random_matrix(1, 5, rng);
  StackedParams theta = row.replicate(7, 1);
  ConsensusState st = make_consensus_state(m, 5, 0.05);
  StackedParams next = proxpda_step(theta, StackedParams::Zero(7, 5), st, m, Direction::descent);
  CHECK((next - theta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(st.mu.cwiseAbs().maxCoeff() < 1e-10);

  DecAdamState adam = make_decadam_state(7, 5, 0.01);
  next = decadam_step(theta, StackedParams::Zero(7, 5), adam, metropolis_weights(g), Direction::descent);
  CHECK((next - theta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(adam.m.isZero(0));
}

TEST_CASE("plain step arithmetic") {
  Eigen::MatrixXd th = Eigen::MatrixXd::Ones(1, 1), g = Eigen::MatrixXd::Constant(1, 1, 2.0);
  CHECK(plain_sgd_step(th, g, 0.1)(0, 0) == doctest::Approx(0.8));
  CHECK(plain_sgd_step(th, Eigen::MatrixXd::Zero(1, 1), 0.1) == th);
  CHECK(plain_sgd_step(plain_sgd_step(th, g, 0.05), g, 0.05)(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("mixed adaptive step") {
  GraphMatrices m = edge_matrices();
  (void)m;
  Eigen::MatrixXd W = metropolis_weights(make_graph(2, {{1, 0}}));
  DecAdamState adam = make_decadam_state(2, 1, 0.01);
  StackedParams theta(2, 1);
  theta << 1.0, 0.0;
  StackedParams next = decadam_step(theta, StackedParams::Zero(2, 1), adam, W, Direction::descent);
  CHECK(next(0, 0) == 0.5);
  CHECK(next(1, 0) == 0.5);

  // A single agent with W = [1] takes the unmixed adaptive step.
  DecAdamState a1 = make_decadam_state(1, 3, 0.1), a2 = a1;
  StackedParams x(1, 3), g(1, 3);
  x << 1, 2, 3;
  g << 0.5, -1, 0;
  StackedParams via_mix = decadam_step(x, g, a1, Eigen::MatrixXd::Identity(1, 1), Direction::descent);
  StackedParams plain = adaptive_step(x, g, a2, Direction::descent);
  CHECK(via_mix == plain);
  // First step without bias correction: m = 0.1 g, w = 0.001 g^2.
  const double expect0 = 1.0 - 0.1 * (0.1 * 0.5) / (std::sqrt(0.001 * 0.25) + 1e-8);
  CHECK(plain(0, 0) == doctest::Approx(expect0).epsilon(1e-14));
  CHECK(plain(0, 2) == 3.0);

  // Ascent accumulates the negated gradient in the first moment.
  DecAdamState asc = make_decadam_state(1, 3, 0.1);
  StackedParams up = adaptive_step(x, g, asc, Direction::ascent);
  CHECK((asc.m + a2.m).isZero(0));
  CHECK(asc.w == a2.w);
  CHECK(up(0, 0) > x(0, 0));
}

TEST_CASE("mixing with zero gradients strictly shrinks disagreement") {
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    CommGraph g = random_graph(6 + t, 0.3, rng.next());
    Eigen::MatrixXd W = metropolis_weights(g);
    DecAdamState adam = make_decadam_state(g.n_agents, 3, 0.01);
    StackedParams theta = random_matrix(g.n_agents, 3, rng);
    double prev = disagreement(theta);
    for (int k = 0; k < 20; ++k) {
      theta = decadam_step(theta, StackedParams::Zero(g.n_agents, 3), adam, W, Direction::descent);
      const double d = disagreement(theta);
      CHECK(d < prev);
      prev = d;
    }
  }
}

TEST_CASE("bias-corrected adaptive step") {
  AdamState s = make_adam_state(2, 0.01);
  Eigen::VectorXd th(2), g(2);
  th << 1.0, -1.0;
  g << 4.0, -0.001;
  Eigen::VectorXd next = adam_step(th, g, s);
  // After bias correction the first step is alpha * sign(g) up to eps.
  CHECK(next(0) == doctest::Approx(0.99).epsilon(1e-6));
  CHECK(next(1) == doctest::Approx(-0.99).epsilon(1e-4));
  CHECK(s.t == 1);
}

TEST_CASE("Q criterion and potential basics") {
  GraphMatrices m = build_matrices(path_graph(3));
  StackedParams x = StackedParams::Constant(3, 2, 0.7);
  Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(2, 2);
  QDiagnostic q = q_criterion(x, mu, StackedParams::Zero(3, 2), m, 1.0);
  CHECK(q.q_value == 0.0);

  StackedParams bad = x;
  bad(0, 0) = 1.7;
  q = q_criterion(bad, mu, StackedParams::Zero(3, 2), m, 0.0);
  CHECK(q.constraint_violation_sq == doctest::Approx(1.0));
  CHECK(q.q_value == doctest::Approx(q.gradient_norm_sq + q.constraint_violation_sq));

  CHECK(potential(x, x, mu, 2.0, 3.0, 1.25, m) == 1.25);

  // Infeasibility v raises the potential by <mu, v> + (1 + c) beta / 2 ||v||^2.
  Rng rng(2);
  Eigen::MatrixXd mu2 = random_matrix(2, 2, rng);
  StackedParams moved = x;
  moved(2, 1) += 0.3;
  const Eigen::MatrixXd v = m.A * moved;
  const double c = 2.0, beta = 3.0;
  const double expected = 1.25 + (mu2.cwiseProduct(v)).sum() + 0.5 * (1 + c) * beta * v.squaredNorm();
  CHECK(potential(moved, moved, mu2, c, beta, 1.25, m) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("least-squares testbed") {
  CHECK_THROWS_AS(make_ls_testbed(1, 3, 0), std::invalid_argument);
  LsTestbed tb = make_ls_testbed(5, 4, 11);
  StackedParams g = tb.grad(tb.optimum());
  CHECK(g.colwise().sum().cwiseAbs().maxCoeff() < 1e-10);

  double L = 0.0;
  for (const auto& M : tb.M) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    L = std::max(L, svd.singularValues()(0) * svd.singularValues()(0));
    CHECK(svd.singularValues()(0) / svd.singularValues()(3) <= 10.0);
  }
  CHECK(L == doctest::Approx(tb.L).epsilon(1e-12));

  GraphMatrices m = build_matrices(ring_graph(5));
  Eigen::MatrixXd mu = optimal_multiplier(tb, m);
  PenaltyChoice pc = choose_penalty(m, tb.L);
  CHECK(q_criterion(tb.optimum(), mu, g, m, pc.beta).q_value < 1e-18);
  CHECK(mu_range_violation(mu, m) < 1e-10);

  // beta meets its lower bound with equality.
  const double bound = 2 * pc.c * tb.L + 2 * pc.c + 1 + 6 * tb.L * tb.L / (pc.beta * m.sigma_min);
  CHECK(pc.beta == doctest::Approx(bound).epsilon(1e-12));
}

TEST_CASE("multipliers stay in the range of the incidence matrix") {
  LsTestbed tb = make_ls_testbed(6, 3, 4);
  TestbedRun run = run_ls_testbed(tb, random_graph(6, 0.5, 1), 300);
  CHECK(run.max_mu_range_violation < 1e-10);
}

TEST_CASE("testbed iteration reaches the consensus optimum at the expected rate") {
  LsTestbed tb = make_ls_testbed(5, 4, 0);
  TestbedRun run = run_ls_testbed(tb, ring_graph(5), 2000);
  CHECK(min_q(run.trace, 2000) / min_q(run.trace, 200) <= 0.2);
  TestbedRun early = run_ls_testbed(tb, ring_graph(5), 200);
  const double gap_early = (early.x_final - tb.optimum()).norm();
  const double gap_late = (run.x_final - tb.optimum()).norm();
  CHECK(gap_late < 0.5 * gap_early);
  for (std::size_t t = 6; t < run.trace.size(); ++t)
    CHECK(run.trace[t].potential <= run.trace[t - 1].potential + 1e-12 * std::abs(run.trace[t - 1].potential));
}
