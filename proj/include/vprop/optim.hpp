#pragma once

#include <Eigen/Dense>

#include "vprop/comm_graph.hpp"

namespace vprop {

/// One row per agent, one column per parameter coordinate.
using StackedParams = Eigen::MatrixXd;

enum class Direction { descent, ascent };

/// Edge multipliers of one consensus-constrained block plus its step size.
struct ConsensusState {
  Eigen::MatrixXd mu;  // E x P, starts at zero
  double alpha = 0.0;
};

ConsensusState make_consensus_state(const GraphMatrices& m, int n_coords, double alpha);

/// Proximal primal-dual consensus round. Returns the new parameters and
/// advances state.mu in place:
///   theta' = 1/2 D^-1 L+ theta - alpha/2 D^-1 A' mu -/+ alpha/2 D^-1 g
///   mu'    = mu + A theta' / alpha
/// (minus for descent, plus for ascent).
StackedParams proxpda_step(const StackedParams& theta, const StackedParams& grads, ConsensusState& state,
                           const GraphMatrices& m, Direction dir);

/// theta - alpha * g, no communication.
Eigen::MatrixXd plain_sgd_step(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& grads, double alpha);

/// First/second moment estimates without bias correction.
struct DecAdamState {
  Eigen::MatrixXd m;
  Eigen::MatrixXd w;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double alpha = 1e-3;
  double eps = 1e-8;
};

DecAdamState make_decadam_state(int rows, int cols, double alpha, double beta1 = 0.9, double beta2 = 0.999,
                                double eps = 1e-8);

/// Mixes with W, then takes the adaptive step:
///   m' = b1 m + (1-b1)(+/-g),  w' = b2 w + (1-b2) g^2,
///   theta' = W theta - alpha m' / (sqrt(w') + eps).
/// For ascent the first moment accumulates -g.
StackedParams decadam_step(const StackedParams& theta, const StackedParams& grads, DecAdamState& adam,
                           const Eigen::MatrixXd& W, Direction dir);

/// The same adaptive step without mixing (each row on its own).
StackedParams adaptive_step(const StackedParams& theta, const StackedParams& grads, DecAdamState& adam, Direction dir);

/// Bias-corrected adaptive momentum for a single parameter vector; used for
/// the agent-specific policy parameters.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double alpha = 1e-3;
  double eps = 1e-8;
};

AdamState make_adam_state(int n, double alpha, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
Eigen::VectorXd adam_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& s);

struct QDiagnostic {
  double q_value = 0.0;
  double gradient_norm_sq = 0.0;
  double constraint_violation_sq = 0.0;
};

/// ||grad f(x) + A' mu + beta A'(Ax - b)||^2 + ||Ax - b||^2 summed over
/// coordinate columns. `b` may be empty (treated as zero).
QDiagnostic q_criterion(const StackedParams& x, const Eigen::MatrixXd& mu, const StackedParams& grads_at_x,
                        const GraphMatrices& m, double beta, const Eigen::MatrixXd& b = Eigen::MatrixXd());

/// f + <mu, Ax> + beta/2 ||Ax||^2 + c beta/2 (||Ax||^2 + ||x - x_prev||^2_{B'B}).
double potential(const StackedParams& x, const StackedParams& x_prev, const Eigen::MatrixXd& mu, double c, double beta,
                 double f_value, const GraphMatrices& m);

/// Spread of the rows around their mean, ||(I - 11'/N) theta||_F.
double disagreement(const StackedParams& theta);

/// Norm of the component of mu outside the range of A (projection onto the
/// nullspace of A').
double mu_range_violation(const Eigen::MatrixXd& mu, const GraphMatrices& m);

}  // namespace vprop
