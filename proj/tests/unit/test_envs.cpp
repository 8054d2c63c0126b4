#include <doctest.h>

#include <cmath>

#include "vprop/envs/navigation.hpp"
#include "vprop/envs/random_mdp.hpp"
#include "vprop/errors.hpp"

using namespace vprop;

namespace {

NavConfig exact_moves(int n) {
  NavConfig cfg;
  cfg.n_agents = n;
  cfg.move_prob = 1.0;
  return cfg;
}

NavState place(const std::vector<Eigen::Vector2d>& agents, const std::vector<Eigen::Vector2d>& landmarks) {
  NavState s;
  s.agents = agents;
  s.landmarks = landmarks;
  s.reached.assign(agents.size(), false);
  return s;
}

}  // namespace

TEST_CASE("random MDP tables") {
  RandomMdp mdp = random_mdp_new(1, 32, 3, 2);
  CHECK(mdp.n_joint == 8);
  for (int s = 0; s < 32; ++s)
    for (int a = 0; a < 8; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < 32; ++s2) {
        CHECK(mdp.p(s, a, s2) > 0.0);
        sum += mdp.p(s, a, s2);
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
      for (int i = 0; i < 3; ++i) {
        CHECK(mdp.reward(i, s, a) >= 0.0);
        CHECK(mdp.reward(i, s, a) <= 4.0);
      }
    }
  RandomMdp again = random_mdp_new(1, 32, 3, 2);
  CHECK(again.P == mdp.P);
  CHECK(again.R == mdp.R);
  CHECK(mdp.split_joint(mdp.joint_index({1, 0, 1})) == std::vector<int>{1, 0, 1});
  CHECK(mdp.joint_index({1, 0, 0}) == 1);
}

TEST_CASE("random MDP with ten agents has a 32 x 1024 x 32 transition tensor") {
  RandomMdp mdp = random_mdp_new(0, 32, 10, 2);
  CHECK(mdp.n_joint == 1024);
  CHECK(mdp.P.size() == 32u * 1024u * 32u);
  CHECK_THROWS_AS(random_mdp_new(0, 32, 20, 2), CapacityError);
  CHECK_THROWS_AS(random_mdp_new(0, 1, 2, 2), std::invalid_argument);
}

TEST_CASE("MDP transitions") {
  RandomMdp mdp = random_mdp_new(4, 6, 2, 2);
  // Deterministic row: all mass on state 4.
  for (int s2 = 0; s2 < 6; ++s2) mdp.P[(2 * mdp.n_joint + 3) * 6 + s2] = s2 == 4 ? 1.0 : 0.0;
  Rng rng(3);
  for (int i = 0; i < 100; ++i) CHECK(mdp_step(mdp, 2, {1, 1}, rng).next_state == 4);

  MdpStep st = mdp_step(mdp, 1, {0, 1}, rng);
  CHECK(st.rewards[0] == mdp.reward(0, 1, 2));
  CHECK(st.rewards[1] == mdp.reward(1, 1, 2));

  std::vector<double> counts(6, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[mdp_step(mdp, 0, {1, 0}, rng).next_state] += 1.0;
  double tv = 0.0;
  for (int s2 = 0; s2 < 6; ++s2) tv += 0.5 * std::abs(counts[s2] / draws - mdp.p(0, 1, s2));
  CHECK(tv < 0.01);
}

TEST_CASE("exact evaluation of a one-state MDP") {
  RandomMdp mdp = random_mdp_new(0, 2, 1, 1);
  // Collapse to a single effective state with reward 1.
  for (auto& r : mdp.R[0]) r = 1.0;
  std::vector<Eigen::MatrixXd> pi{Eigen::MatrixXd::Ones(2, 1)};
  Eigen::VectorXd V = exact_policy_eval(mdp, pi, 0.9);
  CHECK(V(0) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(V(1) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("exact evaluation agrees with discounted Monte-Carlo rollouts") {
  for (std::uint64_t seed : {10ull, 11ull}) {
    RandomMdp mdp = random_mdp_new(seed, 8, 2, 2);
    Rng prng(seed);
    std::vector<Eigen::MatrixXd> pi;
    for (int i = 0; i < 2; ++i) {
      Eigen::MatrixXd p(8, 2);
      for (int s = 0; s < 8; ++s) {
        p(s, 0) = prng.uniform(0.1, 0.9);
        p(s, 1) = 1.0 - p(s, 0);
      }
      pi.push_back(p);
    }
    const double gamma = 0.9;
    Eigen::VectorXd V = exact_policy_eval(mdp, pi, gamma);
    const int start = 3, episodes = 10000, horizon = 200;
    Rng rng(seed + 100);
    double sum = 0.0, sq = 0.0;
    for (int e = 0; e < episodes; ++e) {
      int s = start;
      double ret = 0.0, disc = 1.0;
      for (int t = 0; t < horizon; ++t) {
        std::vector<int> a(2);
        for (int i = 0; i < 2; ++i) a[i] = rng.uniform() < pi[i](s, 0) ? 0 : 1;
        MdpStep st = mdp_step(mdp, s, a, rng);
        ret += disc * 0.5 * (st.rewards[0] + st.rewards[1]);
        disc *= gamma;
        s = st.next_state;
      }
      sum += ret;
      sq += ret * ret;
    }
    const double mean = sum / episodes;
    const double se = std::sqrt((sq / episodes - mean * mean) / episodes);
    CHECK(std::abs(mean - V(start)) < 2.0 * se + 1e-9);
  }
}

TEST_CASE("symmetric states get equal values under the uniform policy") {
  RandomMdp mdp = random_mdp_new(7, 4, 2, 2);
  // Make states 0 and 1 mirror images: swapping them maps the MDP to itself.
  auto swap01 = [](int s) { return s == 0 ? 1 : s == 1 ? 0 : s; };
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < mdp.n_joint; ++a) {
      for (int s2 = 0; s2 < 4; ++s2) {
        const double avg = 0.5 * (mdp.p(s, a, s2) + mdp.p(swap01(s), a, swap01(s2)));
        mdp.P[(s * mdp.n_joint + a) * 4 + s2] = avg;
        mdp.P[(swap01(s) * mdp.n_joint + a) * 4 + swap01(s2)] = avg;
      }
      for (int i = 0; i < 2; ++i) mdp.R[i][swap01(s) * mdp.n_joint + a] = mdp.R[i][s * mdp.n_joint + a];
    }
  std::vector<Eigen::MatrixXd> pi(2, Eigen::MatrixXd::Constant(4, 2, 0.5));
  Eigen::VectorXd V = exact_policy_eval(mdp, pi, 0.95);
  CHECK(std::abs(V(0) - V(1)) < 1e-10);
}

TEST_CASE("random MDP environment episodes") {
  RandomMdpEnv env(random_mdp_new(2, 5, 2, 2), 7);
  Rng rng(1);
  CHECK_THROWS_AS(env.step({0, 0}, rng), InvalidState);
  RawState s = env.reset(rng);
  int steps = 0;
  bool done = false;
  while (!done) {
    StepResult r = env.step({0, 1}, rng);
    done = r.done;
    ++steps;
  }
  CHECK(steps == 7);
  CHECK_THROWS_AS(env.step({0, 0}, rng), InvalidState);
  Eigen::VectorXd f = env.critic_features(s);
  CHECK(f.sum() == 1.0);
  CHECK(f(env.state_index(s)) == 1.0);
  CHECK(env.start_distribution().sum() == doctest::Approx(1.0));

  std::vector<int> hits(5, 0);
  for (int i = 0; i < 5000; ++i) ++hits[env.state_index(env.reset(rng))];
  for (int h : hits) CHECK(std::abs(h / 5000.0 - 0.2) < 0.03);
}

TEST_CASE("navigation layouts") {
  NavConfig cfg;
  NavState s = nav_new(cfg, 5);
  CHECK(s.agents.size() == 8);
  CHECK(s.landmarks.size() == 8);
  CHECK(s.step_count == 0);
  for (int i = 0; i < 8; ++i) {
    CHECK_FALSE(s.reached[i]);
    for (const auto& p : {s.agents[i], s.landmarks[i]}) {
      CHECK(p.minCoeff() >= 0.0);
      CHECK(p.maxCoeff() <= 2.0);
    }
  }
  NavState t = nav_new(cfg, 5);
  CHECK(t.agents == s.agents);
  CHECK(t.landmarks == s.landmarks);
}

TEST_CASE("navigation moves, clamping and staying") {
  NavConfig cfg = exact_moves(2);
  NavState s = place({{0.0, 0.0}, {1.0, 1.0}}, {{1.9, 1.9}, {0.1, 1.9}});
  Rng rng(2);
  nav_step(s, cfg, {kLeft, kStay}, rng);
  CHECK(s.agents[0] == Eigen::Vector2d(0.0, 0.0));
  CHECK(s.agents[1] == Eigen::Vector2d(1.0, 1.0));
  nav_step(s, cfg, {kUp, kRight}, rng);
  CHECK(s.agents[0].y() == doctest::Approx(0.1));
  CHECK(s.agents[1].x() == doctest::Approx(1.1));
  CHECK(s.step_count == 2);
}

TEST_CASE("navigation slips spread over the other four actions") {
  NavConfig cfg;
  cfg.n_agents = 1;
  cfg.move_prob = 0.0;
  cfg.max_steps = 1000000;
  Rng rng(9);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 20000; ++i) {
    NavState s = place({{1.0, 1.0}}, {{0.0, 0.0}});
    nav_step(s, cfg, {kStay}, rng);
    const Eigen::Vector2d d = s.agents[0] - Eigen::Vector2d(1.0, 1.0);
    const int a = d.y() > 0.05 ? kUp : d.y() < -0.05 ? kDown : d.x() < -0.05 ? kLeft : d.x() > 0.05 ? kRight : kStay;
    ++counts[a];
  }
  CHECK(counts[kStay] == 0);
  for (int a = 0; a < 4; ++a) CHECK(std::abs(counts[a] / 20000.0 - 0.25) < 0.02);
}

TEST_CASE("navigation rewards") {
  NavConfig cfg = exact_moves(3);
  NavState s = place({{0.5, 0.5}, {0.55, 0.5}, {1.5, 1.5}}, {{1.9, 1.9}, {1.9, 0.1}, {1.5, 1.62}});
  Rng rng(0);
  NavStepResult r = nav_step(s, cfg, {kStay, kStay, kUp}, rng);
  CHECK(r.rewards[0] == -1.0);
  CHECK(r.rewards[1] == -1.0);
  CHECK(r.rewards[2] == 5.0);
  CHECK(s.reached[2]);
  // Reaching pays once; staying on the landmark pays nothing more.
  r = nav_step(s, cfg, {kStay, kStay, kStay}, rng);
  CHECK(r.rewards[2] == 0.0);

  // An agent inside two colliding pairs pays twice.
  NavState c = place({{1.0, 1.0}, {1.05, 1.0}, {0.95, 1.0}}, {{0, 0}, {0, 2}, {2, 0}});
  r = nav_step(c, cfg, {kStay, kStay, kStay}, rng);
  CHECK(r.rewards[0] == -2.0);
  CHECK(r.rewards[1] == -1.0);
  CHECK(r.rewards[2] == -1.0);
}

TEST_CASE("navigation episodes end and refuse further steps") {
  NavConfig cfg = exact_moves(1);
  cfg.max_steps = 3;
  NavState s = place({{1.0, 1.0}}, {{0.0, 0.0}});
  Rng rng(0);
  CHECK_FALSE(nav_step(s, cfg, {kStay}, rng).done);
  CHECK_FALSE(nav_step(s, cfg, {kStay}, rng).done);
  CHECK(nav_step(s, cfg, {kStay}, rng).done);
  CHECK_THROWS_AS(nav_step(s, cfg, {kStay}, rng), InvalidState);

  NavState r = place({{1.0, 1.0}}, {{1.0, 1.05}});
  cfg.max_steps = 100;
  CHECK(nav_step(r, cfg, {kStay}, rng).done);
}

TEST_CASE("navigation observations") {
  CommGraph full = complete_graph(4);
  NavState s = nav_new(exact_moves(4), 1);
  CHECK(nav_observe(s, 2, full, ObservationMode::full).size() == 10);

  // Star around agent 0 plus a chord: degrees 4, 2, 2, 1, 1.
  CommGraph g = make_graph(5, {{1, 0}, {2, 0}, {3, 0}, {4, 0}, {2, 1}});
  NavState s5 = nav_new(exact_moves(5), 2);
  Eigen::VectorXd o = nav_observe(s5, 1, g, ObservationMode::partial);
  REQUIRE(o.size() == 12);
  CHECK(o.segment<2>(0) == s5.agents[1]);
  CHECK(o.segment<2>(2) == s5.landmarks[1]);
  CHECK(o.segment<2>(4) == s5.agents[0]);
  CHECK(o.segment<2>(6) == s5.agents[2]);
  CHECK(o.tail(4).isZero(0));
  Eigen::VectorXd leaf = nav_observe(s5, 3, g, ObservationMode::partial);
  CHECK(leaf.segment<2>(4) == s5.agents[0]);
  CHECK(leaf.tail(6).isZero(0));
}

TEST_CASE("navigation environment determinism and encoding") {
  NavConfig cfg;
  cfg.n_agents = 4;
  cfg.max_steps = 50;
  CommGraph g = ring_graph(4);
  auto rollout = [&](std::uint64_t seed) {
    NavigationEnv env(cfg, g, ObservationMode::partial, 77);
    Rng rng(seed);
    std::vector<RawState> states{env.reset(rng)};
    std::vector<double> rewards;
    bool done = false;
    int t = 0;
    while (!done) {
      StepResult r = env.step({t % 5, (t + 1) % 5, (t + 2) % 5, (t + 3) % 5}, rng);
      states.push_back(r.next);
      rewards.insert(rewards.end(), r.rewards.begin(), r.rewards.end());
      done = r.done;
      ++t;
    }
    return std::make_pair(states, rewards);
  };
  auto a = rollout(3), b = rollout(3);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  for (const auto& raw : a.first)
    for (int k = 0; k < 8; ++k) {
      CHECK(raw[k] >= 0.0);
      CHECK(raw[k] <= 2.0);
    }

  NavigationEnv env(cfg, g, ObservationMode::full, 77);
  Rng rng(1);
  RawState raw = env.reset(rng);
  CHECK(env.encode(env.decode(raw)) == raw);
  CHECK(env.critic_features(raw).size() == env.critic_dim());
  CHECK(env.actor_features(raw, 1).size() == env.actor_dim());
  // Landmarks belong to the instance, starts to the reset stream.
  NavigationEnv other(cfg, g, ObservationMode::full, 77);
  Rng rng2(2);
  other.reset(rng2);
  CHECK(other.state().landmarks == env.state().landmarks);
  CHECK(other.state().agents != env.state().agents);
}
