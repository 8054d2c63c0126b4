#include "vprop/comm_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "vprop/rng.hpp"

namespace vprop {

namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

CommGraph normalize(int n_agents, std::vector<std::pair<int, int>> edges) {
  if (n_agents < 1) throw std::invalid_argument("graph needs at least one agent");
  for (auto& e : edges) {
    if (e.first < 0 || e.second < 0 || e.first >= n_agents || e.second >= n_agents)
      throw std::invalid_argument("edge endpoint out of range");
    if (e.first == e.second) throw std::invalid_argument("self-loop in edge list");
    if (e.first < e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("duplicate edge in edge list");
  CommGraph g;
  g.n_agents = n_agents;
  g.edges = std::move(edges);
  return g;
}

}  // namespace

std::vector<int> CommGraph::degrees() const {
  std::vector<int> d(n_agents, 0);
  for (const auto& [i, j] : edges) {
    ++d[i];
    ++d[j];
  }
  return d;
}

std::vector<std::vector<int>> CommGraph::neighbors() const {
  std::vector<std::vector<int>> nb(n_agents);
  for (const auto& [i, j] : edges) {
    nb[i].push_back(j);
    nb[j].push_back(i);
  }
  for (auto& v : nb) std::sort(v.begin(), v.end());
  return nb;
}

int CommGraph::max_degree() const {
  auto d = degrees();
  return d.empty() ? 0 : *std::max_element(d.begin(), d.end());
}

bool is_connected(int n_agents, const std::vector<std::pair<int, int>>& edges) {
  if (n_agents <= 0) return false;
  DisjointSets ds(n_agents);
  int components = n_agents;
  for (const auto& [i, j] : edges)
    if (ds.unite(i, j)) --components;
  return components == 1;
}

CommGraph make_graph_unchecked(int n_agents, std::vector<std::pair<int, int>> edges) {
  return normalize(n_agents, std::move(edges));
}

CommGraph make_graph(int n_agents, std::vector<std::pair<int, int>> edges) {
  if (n_agents < 2) throw std::invalid_argument("a communication graph needs at least 2 agents");
  CommGraph g = normalize(n_agents, std::move(edges));
  if (!is_connected(g.n_agents, g.edges)) throw std::invalid_argument("communication graph is not connected");
  return g;
}

CommGraph complete_graph(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j) e.emplace_back(i, j);
  return make_graph(n, std::move(e));
}

CommGraph ring_graph(int n) {
  if (n < 3) return complete_graph(n);
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return make_graph(n, std::move(e));
}

CommGraph path_graph(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < n; ++i) e.emplace_back(i, i - 1);
  return make_graph(n, std::move(e));
}

CommGraph random_graph(int n_agents, double connectivity_ratio, std::uint64_t seed) {
  if (n_agents < 2) throw std::invalid_argument("random_graph needs n_agents >= 2");
  if (!(connectivity_ratio > 0.0 && connectivity_ratio <= 1.0))
    throw std::invalid_argument("connectivity_ratio must lie in (0, 1]");
  Rng rng(seed);
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n_agents; ++i)
    for (int j = 0; j < i; ++j)
      if (rng.uniform() < connectivity_ratio) edges.emplace_back(i, j);

  int repaired = 0;
  if (!is_connected(n_agents, edges)) {
    // Collapse components, then join them with a uniformly random labelled
    // tree over the components (random Pruefer sequence). Each tree edge is
    // realized by a random member of each of the two components.
    DisjointSets ds(n_agents);
    for (const auto& [i, j] : edges) ds.unite(i, j);
    std::vector<std::vector<int>> members;
    std::vector<int> comp_of(n_agents, -1);
    std::vector<int> root_to_comp(n_agents, -1);
    for (int v = 0; v < n_agents; ++v) {
      int r = ds.find(v);
      if (root_to_comp[r] < 0) {
        root_to_comp[r] = static_cast<int>(members.size());
        members.emplace_back();
      }
      comp_of[v] = root_to_comp[r];
      members[comp_of[v]].push_back(v);
    }
    const int c = static_cast<int>(members.size());
    std::vector<std::pair<int, int>> tree;
    if (c == 2) {
      tree.emplace_back(0, 1);
    } else {
      std::vector<int> pruefer(c - 2);
      for (auto& x : pruefer) x = static_cast<int>(rng.index(c));
      std::vector<int> deg(c, 1);
      for (int x : pruefer) ++deg[x];
      for (int x : pruefer) {
        int leaf = 0;
        while (deg[leaf] != 1) ++leaf;
        tree.emplace_back(leaf, x);
        --deg[leaf];
        --deg[x];
      }
      int u = -1, w = -1;
      for (int v = 0; v < c; ++v)
        if (deg[v] == 1) (u < 0 ? u : w) = v;
      tree.emplace_back(u, w);
    }
    for (const auto& [ca, cb] : tree) {
      int a = members[ca][rng.index(members[ca].size())];
      int b = members[cb][rng.index(members[cb].size())];
      edges.emplace_back(a, b);
      ++repaired;
    }
  }
  CommGraph g = make_graph(n_agents, std::move(edges));
  g.repair_edges = repaired;
  return g;
}

GraphMatrices build_matrices(const CommGraph& g) {
  const int n = g.n_agents;
  const int m = g.n_edges();
  GraphMatrices out;
  out.A = Eigen::MatrixXd::Zero(m, n);
  for (int e = 0; e < m; ++e) {
    out.A(e, g.edges[e].first) = 1.0;
    out.A(e, g.edges[e].second) = -1.0;
  }
  out.B = out.A.cwiseAbs();
  out.Lplus = out.B.transpose() * out.B;
  out.Lminus = out.A.transpose() * out.A;
  out.degree = Eigen::VectorXd::Zero(n);
  auto deg = g.degrees();
  for (int i = 0; i < n; ++i) out.degree(i) = deg[i];
  out.D = out.degree.asDiagonal();

  if (n >= 2 && m > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.Lminus, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double cut = 1e-9 * std::max(1.0, ev.maxCoeff());
    out.sigma_min = 0.0;
    for (int i = 0; i < ev.size(); ++i)
      if (ev(i) > cut) {
        out.sigma_min = ev(i);
        break;
      }
  }
  return out;
}

Eigen::MatrixXd metropolis_weights(const CommGraph& g) {
  const int n = g.n_agents;
  auto d = g.degrees();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : g.edges) {
    double w = 1.0 / (1.0 + std::max(d[i], d[j]));
    W(i, j) = w;
    W(j, i) = w;
  }
  for (int i = 0; i < n; ++i) W(i, i) = 1.0 - W.row(i).sum();
  return W;
}

MixingReport validate_mixing(const Eigen::MatrixXd& W, const CommGraph& g) {
  const int n = g.n_agents;
  if (W.rows() != n || W.cols() != n) throw std::invalid_argument("mixing matrix dimension does not match graph");
  MixingReport rep;
  rep.nonnegative = (W.array() >= 0.0).all();

  rep.doubly_stochastic = true;
  for (int i = 0; i < n; ++i) {
    if (std::abs(W.row(i).sum() - 1.0) > 1e-12 || std::abs(W.col(i).sum() - 1.0) > 1e-12)
      rep.doubly_stochastic = false;
  }

  std::set<std::pair<int, int>> present(g.edges.begin(), g.edges.end());
  rep.respects_graph = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || W(i, j) == 0.0) continue;
      if (!present.count({std::max(i, j), std::min(i, j)})) rep.respects_graph = false;
    }

  // Power iteration on the symmetric PSD matrix W'(I - 11'/N)W.
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::MatrixXd M = W.transpose() * J * W;
  Eigen::VectorXd x(n);
  Rng rng(0x5eed);
  for (int i = 0; i < n; ++i) x(i) = rng.uniform(-1.0, 1.0);
  x.normalize();
  double lambda = 0.0;
  int it = 0;
  for (; it < 10000; ++it) {
    Eigen::VectorXd y = M * x;
    double norm = y.norm();
    if (norm == 0.0) {
      lambda = 0.0;
      ++it;
      break;
    }
    double next = x.dot(y);
    x = y / norm;
    if (it > 0 && std::abs(next - lambda) <= 1e-10 * std::abs(next)) {
      lambda = next;
      ++it;
      break;
    }
    lambda = next;
  }
  rep.power_iterations = it;
  rep.spectral_norm = std::abs(lambda) < 1e-14 ? 0.0 : std::abs(lambda);
  rep.contracts = rep.spectral_norm < 1.0;
  return rep;
}

std::string graph_to_json(const CommGraph& g) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["n_agents"] = g.n_agents;
  j["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : g.edges) j["edges"].push_back({a, b});
  return j.dump();
}

CommGraph graph_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return make_graph(j.at("n_agents").get<int>(), std::move(edges));
}

}  // namespace vprop
