#include <doctest.h>

#include <cmath>

#include "vprop/consistency.hpp"

using namespace vprop;

namespace {

Eigen::VectorXd onehot(int n, int i) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  x(i) = 1.0;
  return x;
}

// Linear value net over one-hot states: V(e_s) = values[s].
ParamVector table_value(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  ParamVector p = zero_params(MlpSpec{{n, 1}, Head::identity});
  for (int s = 0; s < n; ++s) p.values(s) = values[s];
  return p;
}

// Two agents over two one-hot states; the step goes from state 0 to state 1.
Segment two_agent_transition(double r0, double r1) {
  Segment seg;
  seg.critic = {onehot(2, 0), onehot(2, 1)};
  seg.actor = {{onehot(2, 0), onehot(2, 0)}};
  seg.actions = {{0, 1}};
  seg.rewards = {{r0, r1}};
  return seg;
}

Segment random_segment(int n_agents, int len, int critic_dim, int actor_dim, int n_actions, Rng& rng) {
  Segment seg;
  auto vec = [&](int d) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x(i) = rng.uniform(-1.0, 1.0);
    return x;
  };
  for (int t = 0; t <= len; ++t) seg.critic.push_back(vec(critic_dim));
  for (int t = 0; t < len; ++t) {
    std::vector<Eigen::VectorXd> a;
    std::vector<int> act;
    std::vector<double> r;
    for (int j = 0; j < n_agents; ++j) {
      a.push_back(vec(actor_dim));
      act.push_back(static_cast<int>(rng.index(n_actions)));
      r.push_back(rng.uniform(0.0, 4.0));
    }
    seg.actor.push_back(a);
    seg.actions.push_back(act);
    seg.rewards.push_back(r);
  }
  return seg;
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-6, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("one-step residual arithmetic") {
  ConsistencyConfig cfg{0.9, 0.0, 0.0, 2, 1};
  ParamVector v = table_value({1.0, 2.0});
  ParamVector pi = zero_params(MlpSpec{{2, 2}, Head::softmax});
  Segment tr = two_agent_transition(1.0, 3.0);
  CHECK(delta_i(0, v, pi, tr, cfg) == doctest::Approx(2.8).epsilon(1e-14));
  CHECK(delta_i(1, v, pi, tr, cfg) == doctest::Approx(4.8).epsilon(1e-14));

  cfg.lambda = 0.01;
  CHECK(delta_i(0, v, pi, tr, cfg) == doctest::Approx(1.0 + 1.8 - 0.02 * std::log(0.5)).epsilon(1e-12));
  CHECK(delta_i(0, v, pi, tr, cfg) == doctest::Approx(2.81386).epsilon(1e-6));

  ConsistencyConfig myopic{0.9, 0.0, 0.0, 2, 1};
  myopic.gamma = 0.0;
  // gamma = 0 is outside the configurable range, so evaluate through the
  // segment directly rather than through a validated config.
  CHECK(delta_i(0, v, pi, tr, myopic) == 1.0);
}

TEST_CASE("multi-step residual") {
  ConsistencyConfig cfg{0.5, 0.0, 0.0, 1, 2};
  ParamVector v = table_value({0.0, 0.0, 4.0});
  ParamVector pi = zero_params(MlpSpec{{3, 2}, Head::softmax});
  Segment seg;
  seg.critic = {onehot(3, 0), onehot(3, 1), onehot(3, 2)};
  seg.actor = {{onehot(3, 0)}, {onehot(3, 1)}};
  seg.actions = {{0}, {1}};
  seg.rewards = {{1.0}, {1.0}};
  CHECK(delta_i_multistep(0, v, pi, seg, cfg) == 2.5);

  seg.rewards = {{0.0}, {0.0}};
  CHECK(delta_i_multistep(0, v, pi, seg, cfg) == 0.25 * 4.0);

  ConsistencyConfig short_k = cfg;
  short_k.k = 1;
  CHECK_THROWS_AS(delta_i_multistep(0, v, pi, seg, short_k), std::invalid_argument);
}

TEST_CASE("k=1 multi-step residual equals the one-step residual bit for bit") {
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    ConsistencyConfig cfg{0.95, 0.05, 0.1, 3, 1};
    Segment seg = random_segment(3, 1, 4, 5, 3, rng);
    ParamVector v = init_params(MlpSpec{{4, 6, 1}, Head::identity}, rng.next());
    ParamVector pi = init_params(MlpSpec{{5, 6, 3}, Head::softmax}, rng.next());
    const int agent = static_cast<int>(rng.index(3));
    CHECK(delta_i_multistep(agent, v, pi, seg, cfg) == delta_i(agent, v, pi, seg, cfg));
  }
}

TEST_CASE("local loss values") {
  ConsistencyConfig cfg{0.9, 0.0, 0.1, 2, 1};
  ParamVector v = table_value({1.0, 2.0});
  ParamVector pi = zero_params(MlpSpec{{2, 2}, Head::softmax});
  // Dual net over critic (2) + two one-hot action blocks (2 x 2); constant 2.
  ParamVector rho = zero_params(MlpSpec{{6, 1}, Head::identity});
  rho.values(6) = 2.0;
  Segment tr = two_agent_transition(1.0, 0.0);
  LossParts lp = local_loss_i(0, v, pi, &rho, tr, cfg);
  CHECK(lp.primal == doctest::Approx(3.24).epsilon(1e-13));
  CHECK(lp.dual == doctest::Approx(-0.064).epsilon(1e-13));

  rho.values(6) = 2.8;
  CHECK(std::abs(local_loss_i(0, v, pi, &rho, tr, cfg).dual) < 1e-25);

  cfg.eta = 0.0;
  lp = local_loss_i(0, v, pi, nullptr, tr, cfg);
  CHECK(lp.dual == 0.0);
  CHECK(lp.total() == lp.primal);
}

TEST_CASE("dual input layout") {
  Eigen::VectorXd x = dual_input(Eigen::Vector2d(0.5, -1.0), {1, 0, 2}, 3);
  Eigen::VectorXd expected(11);
  expected << 0.5, -1.0, 0, 1, 0, 1, 0, 0, 0, 0, 1;
  CHECK(x == expected);
  CHECK_THROWS_AS(dual_input(Eigen::Vector2d(0, 0), {3}, 3), std::invalid_argument);
  ParamVector rho = zero_params(MlpSpec{{11, 1}, Head::identity});
  CHECK(dual_action_count(rho, 2, 3) == 3);
  CHECK_THROWS_AS(dual_action_count(rho, 3, 3), std::invalid_argument);
}

TEST_CASE("per-agent gradients match finite differences on 20 random instances") {
  Rng rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(3));
    const int k = 1 + static_cast<int>(rng.index(3));
    const int na = 2 + static_cast<int>(rng.index(2));
    ConsistencyConfig cfg{rng.uniform(0.5, 0.99), rng.uniform(0.0, 0.2), rng.uniform(0.0, 0.5), n, k};
    const int agent = static_cast<int>(rng.index(n));
    MlpSpec vs{{3, 5, 1}, Head::identity};
    MlpSpec ps{{4, 5, na}, Head::softmax};
    MlpSpec rs{{3 + n * na, 5, 1}, Head::identity};
    ParamVector v = init_params(vs, rng.next());
    ParamVector pi = init_params(ps, rng.next());
    ParamVector rho = init_params(rs, rng.next());
    for (ParamVector* p : {&v, &pi, &rho})
      for (int i = 0; i < p->values.size(); ++i) p->values(i) += rng.uniform(-0.2, 0.2);

    std::vector<Segment> segs;
    for (int b = 0; b < 3; ++b) segs.push_back(random_segment(n, 1 + static_cast<int>(rng.index(k)), 3, 4, na, rng));
    std::vector<const Segment*> batch;
    for (const auto& s : segs) batch.push_back(&s);

    LearnerGrads g = local_grads_i(agent, v, pi, &rho, batch, cfg);
    auto mean_loss = [&](const ParamVector& vv, const ParamVector& pp, const ParamVector& rr, bool dual_only) {
      double s = 0.0;
      for (const auto& seg : segs) {
        LossParts lp = local_loss_i(agent, vv, pp, &rr, seg, cfg);
        s += dual_only ? lp.dual : lp.total();
      }
      return s / segs.size();
    };
    Eigen::VectorXd fd_v = finite_diff_grad(v.values, [&](const Eigen::VectorXd& th) {
      return mean_loss(ParamVector{vs, th}, pi, rho, false);
    });
    Eigen::VectorXd fd_pi = finite_diff_grad(pi.values, [&](const Eigen::VectorXd& th) {
      return mean_loss(v, ParamVector{ps, th}, rho, false);
    });
    Eigen::VectorXd fd_rho = finite_diff_grad(rho.values, [&](const Eigen::VectorXd& th) {
      return mean_loss(v, pi, ParamVector{rs, th}, true);
    });
    CHECK(rel_err(g.g_v, fd_v) < 1e-5);
    REQUIRE(g.g_pi.size() == 1);
    CHECK(rel_err(g.g_pi[0], fd_pi) < 1e-5);
    if (cfg.eta > 0.0) CHECK(rel_err(g.g_rho, fd_rho) < 1e-5);
    CHECK(g.loss.primal + g.loss.dual == doctest::Approx(mean_loss(v, pi, rho, false)).epsilon(1e-12));
  }
}

TEST_CASE("single-critic learner gradients match finite differences") {
  Rng rng(17);
  const int n = 3, na = 2;
  ConsistencyConfig cfg{0.9, 0.1, 0.2, n, 2};
  MlpSpec vs{{3, 4, 1}, Head::identity};
  MlpSpec ps{{4, 4, na}, Head::softmax};
  MlpSpec rs{{3 + n * na, 4, 1}, Head::identity};
  ParamVector v = init_params(vs, 1), rho = init_params(rs, 2);
  std::vector<ParamVector> pis;
  for (int j = 0; j < n; ++j) pis.push_back(init_params(ps, 10 + j));
  std::vector<Segment> segs;
  for (int b = 0; b < 4; ++b) segs.push_back(random_segment(n, 2, 3, 4, na, rng));
  std::vector<const Segment*> batch;
  for (const auto& s : segs) batch.push_back(&s);

  auto make = [&](const ParamVector& vv, const std::vector<ParamVector>& pp, const ParamVector& rr) {
    std::vector<const ParamVector*> ptrs;
    for (const auto& p : pp) ptrs.push_back(&p);
    Learner l = central_learner(vv, ptrs, &rr, cfg);
    double s = 0.0;
    for (const auto& seg : segs) s += segment_loss(l, seg, cfg).total();
    return s / segs.size();
  };
  std::vector<const ParamVector*> ptrs;
  for (const auto& p : pis) ptrs.push_back(&p);
  LearnerGrads g = learner_grads(central_learner(v, ptrs, &rho, cfg), batch, cfg);
  CHECK(rel_err(g.g_v, finite_diff_grad(v.values, [&](const Eigen::VectorXd& th) {
          return make(ParamVector{vs, th}, pis, rho);
        })) < 1e-5);
  for (int j = 0; j < n; ++j) {
    auto fd = finite_diff_grad(pis[j].values, [&](const Eigen::VectorXd& th) {
      auto copy = pis;
      copy[j].values = th;
      return make(v, copy, rho);
    });
    CHECK(rel_err(g.g_pi[j], fd) < 1e-5);
  }
}

TEST_CASE("dual gradient is zero without a dual term and batches average") {
  Rng rng(3);
  ConsistencyConfig cfg{0.9, 0.01, 0.0, 2, 1};
  ParamVector v = init_params(MlpSpec{{3, 4, 1}, Head::identity}, 1);
  ParamVector pi = init_params(MlpSpec{{4, 3}, Head::softmax}, 2);
  ParamVector rho = init_params(MlpSpec{{3 + 2 * 3, 4, 1}, Head::identity}, 3);
  Segment seg = random_segment(2, 1, 3, 4, 3, rng);
  LearnerGrads g1 = local_grads_i(1, v, pi, &rho, {&seg}, cfg);
  CHECK(g1.g_rho.size() == rho.values.size());
  CHECK(g1.g_rho.isZero(0));

  cfg.eta = 0.3;
  g1 = local_grads_i(1, v, pi, &rho, {&seg}, cfg);
  LearnerGrads g5 = local_grads_i(1, v, pi, &rho, {&seg, &seg, &seg, &seg, &seg}, cfg);
  CHECK(rel_err(g5.g_v, g1.g_v) < 1e-14);
  CHECK(rel_err(g5.g_pi[0], g1.g_pi[0]) < 1e-14);
  CHECK(rel_err(g5.g_rho, g1.g_rho) < 1e-14);
  CHECK_THROWS_AS(local_grads_i(1, v, pi, &rho, {}, cfg), std::invalid_argument);
}

TEST_CASE("ascending the dual gradient raises the dual objective") {
  Rng rng(12);
  ConsistencyConfig cfg{0.9, 0.01, 0.5, 2, 1};
  ParamVector v = init_params(MlpSpec{{3, 4, 1}, Head::identity}, 1);
  ParamVector pi = init_params(MlpSpec{{4, 2}, Head::softmax}, 2);
  ParamVector rho = init_params(MlpSpec{{3 + 4, 4, 1}, Head::identity}, 3);
  Segment seg = random_segment(2, 1, 3, 4, 2, rng);
  LearnerGrads g = local_grads_i(0, v, pi, &rho, {&seg}, cfg);
  const double before = local_loss_i(0, v, pi, &rho, seg, cfg).dual;
  ParamVector up = rho;
  up.values += 1e-3 * g.g_rho;
  CHECK(local_loss_i(0, v, pi, &up, seg, cfg).dual > before);
}
