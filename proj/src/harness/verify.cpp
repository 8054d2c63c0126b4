#include "vprop/harness/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "vprop/comm_graph.hpp"
#include "vprop/consistency.hpp"
#include "vprop/envs/random_mdp.hpp"
#include "vprop/optim.hpp"
#include "vprop/tabular.hpp"
#include "vprop/testbed.hpp"

namespace vprop {

namespace {

void check(SuiteResult& r, bool ok, const std::string& what) {
  r.lines.push_back(std::string(ok ? "PASS " : "FAIL ") + what);
  if (!ok) r.passed = false;
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-12});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

SuiteResult graph_suite() {
  SuiteResult r{"graph", true, {}};
  int bad_laplacian = 0, bad_incidence = 0, bad_mixing = 0, bad_sigma = 0;
  double worst_norm = 0.0;
  Rng pick(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(pick.index(31));
    CommGraph g = random_graph(n, pick.uniform(0.05, 1.0), 1000 + trial);
    GraphMatrices m = build_matrices(g);
    if ((m.Lminus + m.Lplus - 2.0 * m.D).cwiseAbs().maxCoeff() != 0.0) ++bad_laplacian;
    if ((m.A * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() != 0.0) ++bad_incidence;
    if (!(m.sigma_min > 0.0)) ++bad_sigma;
    MixingReport rep = validate_mixing(metropolis_weights(g), g);
    if (!rep.ok()) ++bad_mixing;
    worst_norm = std::max(worst_norm, rep.spectral_norm);
  }
  check(r, bad_laplacian == 0, "Lminus + Lplus = 2D on 100 random graphs");
  check(r, bad_incidence == 0, "A 1 = 0 on 100 random graphs");
  check(r, bad_sigma == 0, "sigma_min > 0 on 100 random graphs");
  check(r, bad_mixing == 0, "Metropolis weights pass mixing checks (worst deflated norm " + num(worst_norm) + ")");
  return r;
}

struct GradInstance {
  ConsistencyConfig cfg;
  ParamVector v, rho;
  std::vector<ParamVector> pis;
  std::vector<Segment> segs;
};

GradInstance make_grad_instance(std::uint64_t seed, int k) {
  Rng rng(seed);
  GradInstance g;
  const int n = 3, na = 3, cdim = 4, adim = 3;
  g.cfg = ConsistencyConfig{rng.uniform(0.5, 0.99), rng.uniform(0.01, 0.5), rng.uniform(0.05, 1.0), n, k};
  g.v = init_params(MlpSpec{{cdim, 6, 5, 1}, Head::identity}, rng.next());
  g.rho = init_params(MlpSpec{{cdim + n * na, 6, 1}, Head::identity}, rng.next());
  for (int i = 0; i < n; ++i) g.pis.push_back(init_params(MlpSpec{{adim, 7, na}, Head::softmax}, rng.next()));
  for (auto* p : {&g.v, &g.rho}) p->values.array() += 0.1;  // keep biases off zero
  for (int b = 0; b < 3; ++b) {
    Segment s;
    for (int t = 0; t <= k; ++t) {
      Eigen::VectorXd x(cdim);
      for (int c = 0; c < cdim; ++c) x(c) = rng.uniform(-1.0, 1.0);
      s.critic.push_back(x);
    }
    for (int t = 0; t < k; ++t) {
      std::vector<Eigen::VectorXd> obs;
      std::vector<int> acts;
      std::vector<double> rew;
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd o(adim);
        for (int c = 0; c < adim; ++c) o(c) = rng.uniform(-1.0, 1.0);
        obs.push_back(o);
        acts.push_back(static_cast<int>(rng.index(na)));
        rew.push_back(rng.uniform(0.0, 4.0));
      }
      s.actor.push_back(obs);
      s.actions.push_back(acts);
      s.rewards.push_back(rew);
    }
    g.segs.push_back(std::move(s));
  }
  return g;
}

SuiteResult grad_suite() {
  SuiteResult r{"grad", true, {}};
  double worst = 0.0;
  for (int k : {1, 4}) {
    for (int inst = 0; inst < 10; ++inst) {
      GradInstance g = make_grad_instance(500 + 31 * inst + k, k);
      std::vector<const Segment*> batch;
      for (const auto& s : g.segs) batch.push_back(&s);
      for (int agent = 0; agent < g.cfg.n_agents; ++agent) {
        LearnerGrads an = local_grads_i(agent, g.v, g.pis[agent], &g.rho, batch, g.cfg);
        auto mean_loss = [&](const ParamVector& v, const ParamVector& pi, const ParamVector& rho, bool dual_only) {
          double s = 0.0;
          for (const auto* seg : batch) {
            LossParts lp = local_loss_i(agent, v, pi, &rho, *seg, g.cfg);
            s += dual_only ? lp.dual : lp.total();
          }
          return s / batch.size();
        };
        ParamVector v = g.v, pi = g.pis[agent], rho = g.rho;
        Eigen::VectorXd fd_v = finite_diff_grad(g.v.values, [&](const Eigen::VectorXd& th) {
          v.values = th;
          return mean_loss(v, g.pis[agent], g.rho, false);
        });
        Eigen::VectorXd fd_pi = finite_diff_grad(g.pis[agent].values, [&](const Eigen::VectorXd& th) {
          pi.values = th;
          return mean_loss(g.v, pi, g.rho, false);
        });
        Eigen::VectorXd fd_rho = finite_diff_grad(g.rho.values, [&](const Eigen::VectorXd& th) {
          rho.values = th;
          return mean_loss(g.v, g.pis[agent], rho, true);
        });
        worst = std::max({worst, rel_err(an.g_v, fd_v), rel_err(an.g_pi[0], fd_pi), rel_err(an.g_rho, fd_rho)});
      }
    }
  }
  check(r, worst < 1e-5, "loss gradients match central differences, k in {1, 4} (worst rel. error " + num(worst) + ")");

  double worst_mlp = 0.0;
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    MlpSpec spec{{1 + static_cast<int>(rng.index(6)), 1 + static_cast<int>(rng.index(20)), 1 + static_cast<int>(rng.index(20)),
                  2 + static_cast<int>(rng.index(2))},
                 trial % 2 ? Head::softmax : Head::identity};
    ParamVector p = init_params(spec, rng.next());
    // Nonzero biases keep dead hidden units off the rectifier kink.
    for (int c = 0; c < p.values.size(); ++c) p.values(c) += rng.uniform(-0.1, 0.1);
    Eigen::VectorXd x(spec.input_dim()), w(spec.output_dim());
    for (int c = 0; c < x.size(); ++c) x(c) = rng.uniform(-1.0, 1.0);
    for (int c = 0; c < w.size(); ++c) w(c) = rng.uniform(-1.0, 1.0);
    ForwardTape tape;
    forward(p, x, tape);
    Eigen::VectorXd an = backward(p, tape, w);
    ParamVector q = p;
    Eigen::VectorXd fd = finite_diff_grad(p.values, [&](const Eigen::VectorXd& th) {
      q.values = th;
      return w.dot(forward(q, x));
    });
    worst_mlp = std::max(worst_mlp, rel_err(an, fd));
  }
  check(r, worst_mlp < 1e-5, "network backward matches central differences (worst rel. error " + num(worst_mlp) + ")");
  return r;
}

SuiteResult consensus_suite() {
  SuiteResult r{"consensus", true, {}};
  CommGraph g = random_graph(6, 0.5, 3);
  GraphMatrices m = build_matrices(g);
  Eigen::MatrixXd W = metropolis_weights(g);
  Eigen::RowVectorXd row(4);
  row << 0.3, -1.2, 2.5, 0.0;
  StackedParams theta = row.replicate(6, 1);
  StackedParams zero = StackedParams::Zero(6, 4);
  ConsensusState cs = make_consensus_state(m, 4, 0.1);
  StackedParams p1 = proxpda_step(theta, zero, cs, m, Direction::descent);
  check(r, (p1 - theta).cwiseAbs().maxCoeff() <= 1e-12 && cs.mu.cwiseAbs().maxCoeff() <= 1e-12,
        "proximal step keeps an exact consensus point");
  DecAdamState ad = make_decadam_state(6, 4, 0.1);
  StackedParams p2 = decadam_step(theta, zero, ad, W, Direction::descent);
  check(r, (p2 - theta).cwiseAbs().maxCoeff() <= 1e-12, "adaptive mixed step keeps an exact consensus point");

  CommGraph e = make_graph(2, {{1, 0}});
  GraphMatrices me = build_matrices(e);
  StackedParams two(2, 1);
  two << 1.0, 0.0;
  ConsensusState cs2 = make_consensus_state(me, 1, 0.5);
  StackedParams a = proxpda_step(two, StackedParams::Zero(2, 1), cs2, me, Direction::descent);
  check(r, a(0, 0) == 0.5 && a(1, 0) == 0.5, "proximal step averages (1, 0) to (0.5, 0.5)");
  DecAdamState ad2 = make_decadam_state(2, 1, 0.5);
  StackedParams b = decadam_step(two, StackedParams::Zero(2, 1), ad2, metropolis_weights(e), Direction::descent);
  check(r, b(0, 0) == 0.5 && b(1, 0) == 0.5, "mixed step averages (1, 0) to (0.5, 0.5)");
  return r;
}

SuiteResult rate_suite() {
  SuiteResult r{"rate", true, {}};
  LsTestbed tb = make_ls_testbed(5, 4, 2024);
  TestbedRun run = run_ls_testbed(tb, ring_graph(5), 2000);
  const double ratio = min_q(run.trace, 2000) / min_q(run.trace, 200);
  check(r, ratio <= 0.2, "min Q over 2000 iterations / min Q over 200 = " + num(ratio) + " (<= 0.2)");
  check(r, run.max_mu_range_violation < 1e-10,
        "multipliers stay in the range of A (max violation " + num(run.max_mu_range_violation) + ")");
  return r;
}

SuiteResult oracle_suite() {
  SuiteResult r{"oracle", true, {}};
  const double tol = 1e-10;
  double worst_margin = 0.0, worst_shift = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    RandomMdp mdp = random_mdp_new(900 + trial, 32, 3, 2);
    TabularModel m = mdp.averaged_model();
    const double gamma = 0.9, lambda = 0.01 + 0.1 * (trial % 5);
    TabularSoftSolution sol = soft_value_iteration(m, gamma, lambda, tol);
    worst_margin = std::max(worst_margin, sol.residual / (tol / (1.0 - gamma)));
    const double c = 0.37;
    Eigen::VectorXd shifted = sol.V.array() + c;
    const double res = consistency_residual(shifted, sol.log_pi, m, gamma, lambda);
    worst_shift = std::max(worst_shift, std::abs(res - std::abs(c * (1.0 - gamma))));
  }
  check(r, worst_margin < 1.0, "soft fixed point residual below tol/(1-gamma) on 20 MDPs (worst fraction " + num(worst_margin) + ")");
  check(r, worst_shift <= 1e-9, "shifting V by c moves the residual by |c(1-gamma)| (worst gap " + num(worst_shift) + ")");
  return r;
}

}  // namespace

std::vector<std::string> suite_names() { return {"graph", "grad", "consensus", "rate", "oracle"}; }

SuiteResult run_suite(const std::string& name) {
  if (name == "graph") return graph_suite();
  if (name == "grad") return grad_suite();
  if (name == "consensus") return consensus_suite();
  if (name == "rate") return rate_suite();
  if (name == "oracle") return oracle_suite();
  throw std::invalid_argument("unknown verification suite '" + name + "'");
}

bool run_verify(const std::string& which, std::ostream& out) {
  std::vector<std::string> names = which == "all" ? suite_names() : std::vector<std::string>{which};
  bool ok = true;
  for (const auto& n : names) {
    SuiteResult r = run_suite(n);
    for (const auto& line : r.lines) out << "[" << r.name << "] " << line << '\n';
    ok = ok && r.passed;
  }
  return ok;
}

}  // namespace vprop
