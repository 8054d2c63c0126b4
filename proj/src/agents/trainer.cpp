#include "vprop/agents/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "vprop/agents/independent_q.hpp"
#include "vprop/consistency.hpp"

namespace vprop {

const char* to_string(Variant v) { return v == Variant::proxpda ? "proxpda" : "accel"; }

const char* to_string(Method m) {
  switch (m) {
    case Method::value_propagation: return "value_propagation";
    case Method::centralized: return "centralized";
    case Method::no_comm: return "no_comm";
    case Method::independent_q: return "independent_q";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "proxpda") return Variant::proxpda;
  if (s == "accel") return Variant::accel;
  throw std::invalid_argument("unknown variant '" + s + "' (expected proxpda or accel)");
}

Method parse_method(const std::string& s) {
  if (s == "value_propagation") return Method::value_propagation;
  if (s == "centralized") return Method::centralized;
  if (s == "no_comm") return Method::no_comm;
  if (s == "independent_q") return Method::independent_q;
  throw std::invalid_argument("unknown method '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (dual_steps < 0) throw std::invalid_argument("dual_steps must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(alpha_v > 0.0 && alpha_pi > 0.0 && alpha_rho > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (eval_every < 1 || eval_episodes < 1 || probe_state_count < 1)
    throw std::invalid_argument("evaluation settings must be positive");
  if (replay_capacity < 1) throw std::invalid_argument("replay capacity must be positive");
}

int TrainConfig::effective_batch() const {
  return theory_batch ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(iterations)))) : batch_size;
}

std::string TrainLog::to_csv(bool include_wall) const {
  std::string out = "iter,return_mean,return_se,v_disagree_max,v_disagree_mean,loss_primal,loss_dual,q_diag";
  out += include_wall ? ",wall_ms\n" : "\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.iter, r.return_mean, r.return_se,
                  r.v_disagree_max, r.v_disagree_mean, r.loss_primal, r.loss_dual, r.q_diag);
    out += buf;
    if (include_wall) {
      std::snprintf(buf, sizeof buf, ",%.3f", r.wall_ms);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

TrainLog TrainLog::from_csv(const std::string& text) {
  TrainLog log;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("iter,", 0) != 0) throw std::invalid_argument("not a training log");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TrainLogRow r;
    int n = std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &r.iter, &r.return_mean, &r.return_se,
                        &r.v_disagree_max, &r.v_disagree_mean, &r.loss_primal, &r.loss_dual, &r.q_diag, &r.wall_ms);
    if (n < 8) throw std::invalid_argument("malformed training log row: " + line);
    log.rows.push_back(r);
  }
  return log;
}

std::vector<Eigen::VectorXd> probe_inputs(MultiAgentEnv& env, const TrainConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, {kStreamProbe}));
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < cfg.probe_state_count; ++i) out.push_back(env.critic_features(env.reset(rng)));
  return out;
}

namespace {

MlpSpec make_spec(int in, const std::vector<int>& hidden, int out, Head head) {
  MlpSpec s;
  s.widths.push_back(in);
  for (int h : hidden) s.widths.push_back(h);
  s.widths.push_back(out);
  s.head = head;
  s.validate();
  return s;
}

StackedParams stack(const std::vector<ParamVector>& nets) {
  StackedParams m(nets.size(), nets.front().values.size());
  for (std::size_t i = 0; i < nets.size(); ++i) m.row(i) = nets[i].values.transpose();
  return m;
}

void unstack(const StackedParams& m, std::vector<ParamVector>& nets) {
  for (std::size_t i = 0; i < nets.size(); ++i) nets[i].values = m.row(i).transpose();
}

}  // namespace

TrainResult train(MultiAgentEnv& env, const CommGraph* graph, const TrainConfig& cfg, Method method,
                  const TrainHooks& hooks) {
  if (method == Method::independent_q) return train_independent_q(env, cfg, hooks);
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const int N = env.n_agents();
  const int A = env.n_actions();
  const bool central = method == Method::centralized;
  const bool consensus = method == Method::value_propagation && N > 1;
  GraphMatrices gm;
  Eigen::MatrixXd W;
  if (consensus) {
    if (!graph) throw std::invalid_argument("value propagation needs a communication graph");
    if (graph->n_agents != N) throw std::invalid_argument("graph size does not match agent count");
    if (!is_connected(graph->n_agents, graph->edges)) throw std::invalid_argument("communication graph is disconnected");
    gm = build_matrices(*graph);
    W = metropolis_weights(*graph);
  }
  const int n_learners = central ? 1 : N;
  const ConsistencyConfig ccfg{cfg.gamma, cfg.lambda, cfg.eta, N, cfg.k};
  const bool use_dual = cfg.eta > 0.0;
  const int batch = cfg.effective_batch();

  const MlpSpec vspec = make_spec(env.critic_dim(), cfg.v_hidden, 1, Head::identity);
  const MlpSpec pispec = make_spec(env.actor_dim(), cfg.pi_hidden, A, Head::softmax);
  const MlpSpec rhospec = make_spec(env.critic_dim() + N * A, cfg.rho_hidden, 1, Head::identity);

  std::vector<ParamVector> vnets, rhonets, pis;
  for (int l = 0; l < n_learners; ++l) {
    vnets.push_back(init_params(vspec, derive_seed(cfg.seed, {kStreamInitV, static_cast<std::uint64_t>(l)})));
    rhonets.push_back(init_params(rhospec, derive_seed(cfg.seed, {kStreamInitRho, static_cast<std::uint64_t>(l)})));
  }
  for (int i = 0; i < N; ++i)
    pis.push_back(init_params(pispec, derive_seed(cfg.seed, {kStreamInitPi, static_cast<std::uint64_t>(i)})));

  const int Pv = vspec.n_params(), Pr = rhospec.n_params(), Pp = pispec.n_params();
  ConsensusState cs_v, cs_rho;
  if (consensus && cfg.variant == Variant::proxpda) {
    cs_v = make_consensus_state(gm, Pv, cfg.alpha_v);
    cs_rho = make_consensus_state(gm, Pr, cfg.alpha_rho);
  }
  DecAdamState ad_v = make_decadam_state(n_learners, Pv, cfg.alpha_v, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  DecAdamState ad_rho = make_decadam_state(n_learners, Pr, cfg.alpha_rho, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  std::vector<AdamState> ad_pi;
  for (int i = 0; i < N; ++i) ad_pi.push_back(make_adam_state(Pp, cfg.alpha_pi, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps));

  Rng collect_rng(derive_seed(cfg.seed, {kStreamCollect}));
  Rng dual_rng(derive_seed(cfg.seed, {kStreamSampleDual}));
  Rng primal_rng(derive_seed(cfg.seed, {kStreamSamplePrimal}));
  ReplayBuffer buffer(cfg.replay_capacity);

  TrainResult result;
  result.method = method;
  result.probe_inputs = probe_inputs(env, cfg);

  auto pi_ptrs = [&] {
    std::vector<const ParamVector*> p;
    for (const auto& x : pis) p.push_back(&x);
    return p;
  };
  auto v_ptrs = [&] {
    std::vector<const ParamVector*> p;
    for (const auto& x : vnets) p.push_back(&x);
    return p;
  };
  auto make_learner = [&](int l) {
    const ParamVector* rho = use_dual ? &rhonets[l] : nullptr;
    if (central) return central_learner(vnets[0], pi_ptrs(), rho, ccfg);
    return agent_learner(l, vnets[l], pis[l], rho, ccfg);
  };
  auto agent_nets = [&] {
    std::vector<AgentNets> out;
    for (int i = 0; i < N; ++i) {
      const int l = central ? 0 : i;
      out.push_back(AgentNets{vnets[l], pis[i], rhonets[l]});
    }
    return out;
  };
  auto sample_batch = [&](Rng& rng, std::vector<Segment>& store) {
    store.clear();
    for (std::size_t idx : buffer.sample_indices(batch, rng)) store.push_back(materialize(buffer.at(idx), env));
    std::vector<const Segment*> ptrs;
    for (const auto& s : store) ptrs.push_back(&s);
    return ptrs;
  };

  std::vector<Segment> seg_store;
  for (int t = 0; t < cfg.iterations; ++t) {
    {
      SoftmaxPolicies behaviour(pi_ptrs());
      auto traj = std::make_shared<const Trajectory>(collect_episode(env, behaviour, collect_rng));
      for (auto& ref : episode_windows(traj, cfg.k)) buffer.add(std::move(ref));
    }

    // Dual phase: ascend the dual term in the dual parameters.
    if (use_dual) {
      for (int r = 0; r < cfg.dual_steps; ++r) {
        auto mb = sample_batch(dual_rng, seg_store);
        StackedParams G(n_learners, Pr);
        for (int l = 0; l < n_learners; ++l)
          G.row(l) = learner_grads(make_learner(l), mb, ccfg, GradRequest{false, false, true}).g_rho.transpose();
        StackedParams R = stack(rhonets);
        if (consensus) {
          ++result.consensus_calls;
          R = cfg.variant == Variant::proxpda ? proxpda_step(R, G, cs_rho, gm, Direction::ascent)
                                              : decadam_step(R, G, ad_rho, W, Direction::ascent);
        } else {
          R = cfg.variant == Variant::proxpda ? Eigen::MatrixXd(R + cfg.alpha_rho * G)
                                              : adaptive_step(R, G, ad_rho, Direction::ascent);
        }
        unstack(R, rhonets);
      }
    }

    // Primal phase: one round on value and policy parameters.
    auto mb = sample_batch(primal_rng, seg_store);
    StackedParams GV(n_learners, Pv);
    std::vector<Eigen::VectorXd> gpi(N);
    double loss_primal = 0.0, loss_dual = 0.0;
    for (int l = 0; l < n_learners; ++l) {
      Learner learner = make_learner(l);
      LearnerGrads g = learner_grads(learner, mb, ccfg, GradRequest{true, true, false});
      GV.row(l) = g.g_v.transpose();
      for (std::size_t q = 0; q < learner.owned.size(); ++q) gpi[learner.owned[q]] = std::move(g.g_pi[q]);
      loss_primal += g.loss.primal / n_learners;
      loss_dual += g.loss.dual / n_learners;
    }
    for (int i = 0; i < N; ++i) {
      if (cfg.variant == Variant::proxpda) {
        pis[i].values -= cfg.alpha_pi * gpi[i];
      } else {
        pis[i].values = adam_step(pis[i].values, gpi[i], ad_pi[i]);
      }
    }
    StackedParams V = stack(vnets);
    double q_diag = 0.0;
    if (consensus) {
      ++result.consensus_calls;
      if (cfg.variant == Variant::proxpda) {
        q_diag = q_criterion(V, cs_v.mu, GV, gm, 1.0 / cfg.alpha_v).q_value;
        V = proxpda_step(V, GV, cs_v, gm, Direction::descent);
      } else {
        q_diag = q_criterion(V, Eigen::MatrixXd::Zero(gm.A.rows(), Pv), GV, gm, 0.0).q_value;
        V = decadam_step(V, GV, ad_v, W, Direction::descent);
      }
    } else {
      q_diag = GV.squaredNorm();
      V = cfg.variant == Variant::proxpda ? plain_sgd_step(V, GV, cfg.alpha_v) : adaptive_step(V, GV, ad_v, Direction::descent);
    }
    unstack(V, vnets);

    const bool last = t + 1 == cfg.iterations;
    if ((t + 1) % cfg.eval_every == 0 || last) {
      TrainLogRow row;
      row.iter = t + 1;
      SoftmaxPolicies pol(pi_ptrs());
      Rng eval_rng(derive_seed(cfg.seed, {kStreamEval, static_cast<std::uint64_t>(t + 1)}));
      EvalResult ev = eval_policy(env, pol, cfg.eval_episodes, cfg.gamma, eval_rng, false);
      row.return_mean = ev.mean;
      row.return_se = ev.se;
      if (n_learners >= 2) {
        Disagreement d = consensus_disagreement(v_ptrs(), result.probe_inputs);
        row.v_disagree_max = d.max_pairwise;
        row.v_disagree_mean = d.mean_pairwise;
      }
      row.loss_primal = loss_primal;
      row.loss_dual = loss_dual;
      row.q_diag = q_diag;
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
      result.log.rows.push_back(row);
    }
    if (hooks.snapshot && ((t + 1) % (10 * cfg.eval_every) == 0 || last))
      hooks.snapshot(Snapshot{method, t + 1, agent_nets()});
    if (hooks.after_iteration) hooks.after_iteration(t + 1, agent_nets());
  }

  result.nets = agent_nets();
  if (n_learners >= 2) result.final_disagreement = consensus_disagreement(v_ptrs(), result.probe_inputs);
  result.final_value_range = probe_value_range(v_ptrs(), result.probe_inputs);
  result.final_return = result.log.rows.back().return_mean;
  return result;
}

TrainResult train_value_propagation(MultiAgentEnv& env, const CommGraph& graph, const TrainConfig& cfg,
                                    const TrainHooks& hooks) {
  return train(env, &graph, cfg, Method::value_propagation, hooks);
}

TrainResult train_centralized_pcl(MultiAgentEnv& env, const TrainConfig& cfg, const TrainHooks& hooks) {
  return train(env, nullptr, cfg, Method::centralized, hooks);
}

TrainResult train_no_comm_pcl(MultiAgentEnv& env, const TrainConfig& cfg, const TrainHooks& hooks) {
  return train(env, nullptr, cfg, Method::no_comm, hooks);
}

namespace {

nlohmann::json net_json(const ParamVector& p) {
  if (p.spec.widths.empty()) return nullptr;
  return nlohmann::json::parse(params_to_json(p));
}

ParamVector net_from(const nlohmann::json& j) {
  if (j.is_null()) return ParamVector{};
  return params_from_json(j.dump());
}

}  // namespace

std::string snapshot_to_json(const Snapshot& snap) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["method"] = to_string(snap.method);
  j["iter"] = snap.iter;
  j["agents"] = nlohmann::json::array();
  for (const auto& a : snap.nets) j["agents"].push_back({{"v", net_json(a.v)}, {"pi", net_json(a.pi)}, {"rho", net_json(a.rho)}});
  return j.dump();
}

Snapshot snapshot_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  Snapshot s;
  s.method = parse_method(j.at("method").get<std::string>());
  s.iter = j.value("iter", 0);
  for (const auto& a : j.at("agents")) s.nets.push_back(AgentNets{net_from(a.at("v")), net_from(a.at("pi")), net_from(a.at("rho"))});
  return s;
}

}  // namespace vprop
