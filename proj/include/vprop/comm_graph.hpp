#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vprop {

/// Undirected communication graph. Edges are stored as (i, j) with i > j,
/// sorted lexicographically; construction through make_graph enforces this.
struct CommGraph {
  int n_agents = 0;
  std::vector<std::pair<int, int>> edges;
  // Edges added to make a sampled graph connected (0 for hand-built graphs).
  int repair_edges = 0;

  int n_edges() const { return static_cast<int>(edges.size()); }
  std::vector<int> degrees() const;
  std::vector<std::vector<int>> neighbors() const;  // sorted ascending
  int max_degree() const;
};

/// Normalizes orientation/ordering and checks the graph invariants
/// (no self-loops or duplicates, connected, every degree >= 1).
CommGraph make_graph(int n_agents, std::vector<std::pair<int, int>> edges);

/// Same normalization without the connectivity requirement. Used for the
/// edgeless baseline topology and for negative tests.
CommGraph make_graph_unchecked(int n_agents, std::vector<std::pair<int, int>> edges);

bool is_connected(int n_agents, const std::vector<std::pair<int, int>>& edges);

CommGraph complete_graph(int n);
CommGraph ring_graph(int n);
CommGraph path_graph(int n);

/// Erdos-Renyi sample with per-pair probability `connectivity_ratio`; a
/// disconnected sample is repaired with a random spanning tree over its
/// components.
CommGraph random_graph(int n_agents, double connectivity_ratio, std::uint64_t seed);

struct GraphMatrices {
  Eigen::MatrixXd D;       // N x N degree
  Eigen::MatrixXd A;       // E x N signed incidence
  Eigen::MatrixXd B;       // E x N signless incidence
  Eigen::MatrixXd Lplus;   // B'B
  Eigen::MatrixXd Lminus;  // A'A
  Eigen::VectorXd degree;
  double sigma_min = 0.0;  // smallest nonzero eigenvalue of A'A
};

GraphMatrices build_matrices(const CommGraph& g);

Eigen::MatrixXd metropolis_weights(const CommGraph& g);

struct MixingReport {
  bool nonnegative = false;
  bool doubly_stochastic = false;
  bool respects_graph = false;
  bool contracts = false;
  double spectral_norm = 0.0;
  int power_iterations = 0;

  bool ok() const { return nonnegative && doubly_stochastic && respects_graph && contracts; }
};

MixingReport validate_mixing(const Eigen::MatrixXd& W, const CommGraph& g);

std::string graph_to_json(const CommGraph& g);
CommGraph graph_from_json(const std::string& text);

}  // namespace vprop
