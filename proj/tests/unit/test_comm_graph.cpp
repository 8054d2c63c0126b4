#include <doctest.h>

#include <cmath>

#include "vprop/comm_graph.hpp"
#include "vprop/rng.hpp"

using namespace vprop;

TEST_CASE("random_graph with two agents and ratio one is a single edge") {
  for (std::uint64_t seed : {0ull, 5ull, 99ull}) {
    CommGraph g = random_graph(2, 1.0, seed);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0] == std::make_pair(1, 0));
  }
}

TEST_CASE("random_graph with ratio one on three agents is a triangle") {
  CommGraph g = random_graph(3, 1.0, 42);
  CHECK(g.edges == std::vector<std::pair<int, int>>{{1, 0}, {2, 0}, {2, 1}});
}

TEST_CASE("random_graph edge count for n=8 ratio 0.5 averages near 14") {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    CommGraph g = random_graph(8, 0.5, seed);
    CHECK(is_connected(g.n_agents, g.edges));
    total += g.n_edges();
  }
  // Binomial(28, 0.5) mean is 14; repair adds a little on top.
  const double mean = total / 1000.0;
  CHECK(mean > 13.7);
  CHECK(mean < 14.6);
}

TEST_CASE("random_graph is deterministic and repairs disconnected samples") {
  CommGraph a = random_graph(20, 0.05, 7);
  CommGraph b = random_graph(20, 0.05, 7);
  CHECK(a.edges == b.edges);
  CHECK(is_connected(a.n_agents, a.edges));
  CHECK(a.repair_edges > 0);
  CHECK_THROWS_AS(random_graph(1, 0.5, 0), std::invalid_argument);
}

TEST_CASE("make_graph rejects self-loops, duplicates and disconnected graphs") {
  CHECK_THROWS_AS(make_graph(3, {{1, 1}, {2, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_graph(3, {{1, 0}, {0, 1}, {2, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(make_graph(4, {{1, 0}, {3, 2}}), std::invalid_argument);
  CommGraph g = make_graph(3, {{0, 1}, {1, 2}});
  CHECK(g.edges == std::vector<std::pair<int, int>>{{1, 0}, {2, 1}});
}

TEST_CASE("matrices of the path 0-1-2") {
  GraphMatrices m = build_matrices(path_graph(3));
  Eigen::MatrixXd expected(3, 3);
  expected << 1, 1, 0, 1, 2, 1, 0, 1, 1;
  CHECK(m.Lplus == expected);
  CHECK((m.Lminus + m.Lplus - 2.0 * m.D).cwiseAbs().maxCoeff() == 0.0);
  // Path Laplacian eigenvalues are 0, 1, 3.
  CHECK(m.sigma_min == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matrices of the triangle") {
  GraphMatrices m = build_matrices(complete_graph(3));
  Eigen::MatrixXd expected(3, 3);
  expected << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  CHECK(m.Lplus == expected);
  CHECK(m.D == Eigen::MatrixXd(Eigen::Vector3d(2, 2, 2).asDiagonal()));
}

TEST_CASE("matrices of a single edge") {
  GraphMatrices m = build_matrices(make_graph(2, {{1, 0}}));
  REQUIRE(m.A.rows() == 1);
  CHECK(m.A(0, 0) == -1.0);
  CHECK(m.A(0, 1) == 1.0);
  Eigen::MatrixXd lm(2, 2);
  lm << 1, -1, -1, 1;
  CHECK(m.Lminus == lm);
  CHECK(m.B == m.A.cwiseAbs());
}

TEST_CASE("null vector of the graph Laplacian is the all-ones vector") {
  CommGraph g = random_graph(12, 0.3, 4);
  GraphMatrices m = build_matrices(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.Lminus);
  Eigen::VectorXd v0 = es.eigenvectors().col(0);
  v0 /= v0(0);
  CHECK((v0 - Eigen::VectorXd::Ones(12)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(es.eigenvalues()(1) == doctest::Approx(m.sigma_min));
  // Off-edge entries of the signless Laplacian vanish.
  auto nb = g.neighbors();
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j)
      if (i != j && std::find(nb[i].begin(), nb[i].end(), j) == nb[i].end()) CHECK(m.Lplus(i, j) == 0.0);
}

TEST_CASE("Metropolis weights on small graphs") {
  Eigen::MatrixXd W3 = metropolis_weights(complete_graph(3));
  CHECK((W3.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);

  Eigen::MatrixXd Wp = metropolis_weights(path_graph(3));
  Eigen::MatrixXd expected(3, 3);
  expected << 2.0 / 3, 1.0 / 3, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 1.0 / 3, 2.0 / 3;
  CHECK((Wp - expected).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::MatrixXd W2 = metropolis_weights(make_graph(2, {{1, 0}}));
  CHECK((W2.array() - 0.5).abs().maxCoeff() == 0.0);
}

TEST_CASE("validate_mixing reports each condition") {
  CommGraph k3 = complete_graph(3);
  MixingReport ok = validate_mixing(metropolis_weights(k3), k3);
  CHECK(ok.ok());
  CHECK(ok.spectral_norm < 1e-14);

  MixingReport id = validate_mixing(Eigen::MatrixXd::Identity(3, 3), k3);
  CHECK(id.respects_graph);
  CHECK(id.doubly_stochastic);
  CHECK(id.nonnegative);
  CHECK_FALSE(id.contracts);
  CHECK(id.spectral_norm == doctest::Approx(1.0).epsilon(1e-9));

  Eigen::MatrixXd neg = metropolis_weights(k3);
  neg(0, 1) = -0.1;
  neg(0, 0) += 0.1 + 1.0 / 3.0;
  neg(0, 2) -= 1.0 / 3.0;
  CHECK_FALSE(validate_mixing(neg, k3).nonnegative);

  Eigen::MatrixXd off = metropolis_weights(path_graph(3));
  off(0, 2) = 0.1;
  CHECK_FALSE(validate_mixing(off, path_graph(3)).respects_graph);

  CHECK_THROWS_AS(validate_mixing(Eigen::MatrixXd::Identity(2, 2), k3), std::invalid_argument);
}

TEST_CASE("Metropolis weights pass validation on 100 random connected graphs") {
  Rng rng(123);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(rng.index(31));
    CommGraph g = random_graph(n, rng.uniform(0.05, 1.0), rng.next());
    MixingReport r = validate_mixing(metropolis_weights(g), g);
    CHECK(r.ok());
  }
}

TEST_CASE("graph JSON round trip") {
  CommGraph g = random_graph(9, 0.4, 3);
  CommGraph back = graph_from_json(graph_to_json(g));
  CHECK(back.n_agents == g.n_agents);
  CHECK(back.edges == g.edges);
}
