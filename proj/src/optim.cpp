#include "vprop/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace vprop {

ConsensusState make_consensus_state(const GraphMatrices& m, int n_coords, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("consensus step size must be positive");
  return ConsensusState{Eigen::MatrixXd::Zero(m.A.rows(), n_coords), alpha};
}

StackedParams proxpda_step(const StackedParams& theta, const StackedParams& grads, ConsensusState& state,
                           const GraphMatrices& m, Direction dir) {
  const Eigen::Index n = m.degree.size();
  if (theta.rows() != n || grads.rows() != n || grads.cols() != theta.cols())
    throw std::invalid_argument("stacked parameter shapes do not match");
  if (state.mu.rows() != m.A.rows() || state.mu.cols() != theta.cols())
    throw std::invalid_argument("multiplier shape does not match");
  if (!(state.alpha > 0.0)) throw std::invalid_argument("consensus step size must be positive");
  for (Eigen::Index i = 0; i < n; ++i)
    if (m.degree(i) <= 0.0) throw std::invalid_argument("zero-degree node: degree matrix is not invertible");

  const double sign = dir == Direction::descent ? -1.0 : 1.0;
  StackedParams rhs = 0.5 * (m.Lplus * theta);
  rhs.noalias() -= (0.5 * state.alpha) * (m.A.transpose() * state.mu);
  rhs += (sign * 0.5 * state.alpha) * grads;
  StackedParams next = m.degree.cwiseInverse().asDiagonal() * rhs;
  state.mu.noalias() += (1.0 / state.alpha) * (m.A * next);
  return next;
}

Eigen::MatrixXd plain_sgd_step(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& grads, double alpha) {
  if (theta.rows() != grads.rows() || theta.cols() != grads.cols()) throw std::invalid_argument("gradient shape mismatch");
  if (!(alpha > 0.0)) throw std::invalid_argument("step size must be positive");
  return theta - alpha * grads;
}

DecAdamState make_decadam_state(int rows, int cols, double alpha, double beta1, double beta2, double eps) {
  if (!(alpha > 0.0)) throw std::invalid_argument("step size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("moment decay rates must lie in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("adaptive stabilizer must be positive");
  return DecAdamState{Eigen::MatrixXd::Zero(rows, cols), Eigen::MatrixXd::Zero(rows, cols), beta1, beta2, alpha, eps};
}

namespace {

void update_moments(const StackedParams& grads, DecAdamState& adam, Direction dir) {
  if (adam.m.rows() != grads.rows() || adam.m.cols() != grads.cols())
    throw std::invalid_argument("moment shape does not match gradients");
  const double sign = dir == Direction::descent ? 1.0 : -1.0;
  adam.m = adam.beta1 * adam.m + ((1.0 - adam.beta1) * sign) * grads;
  adam.w = adam.beta2 * adam.w + (1.0 - adam.beta2) * grads.cwiseProduct(grads);
}

}  // namespace

StackedParams adaptive_step(const StackedParams& theta, const StackedParams& grads, DecAdamState& adam, Direction dir) {
  if (theta.rows() != grads.rows() || theta.cols() != grads.cols()) throw std::invalid_argument("gradient shape mismatch");
  update_moments(grads, adam, dir);
  return theta - adam.alpha * (adam.m.array() / (adam.w.array().sqrt() + adam.eps)).matrix();
}

StackedParams decadam_step(const StackedParams& theta, const StackedParams& grads, DecAdamState& adam,
                           const Eigen::MatrixXd& W, Direction dir) {
  if (W.rows() != theta.rows() || W.cols() != theta.rows()) throw std::invalid_argument("mixing matrix shape mismatch");
  if (theta.rows() != grads.rows() || theta.cols() != grads.cols()) throw std::invalid_argument("gradient shape mismatch");
  update_moments(grads, adam, dir);
  StackedParams mixed = W * theta;
  return mixed - adam.alpha * (adam.m.array() / (adam.w.array().sqrt() + adam.eps)).matrix();
}

AdamState make_adam_state(int n, double alpha, double beta1, double beta2, double eps) {
  if (!(alpha > 0.0)) throw std::invalid_argument("step size must be positive");
  AdamState s;
  s.m = Eigen::VectorXd::Zero(n);
  s.v = Eigen::VectorXd::Zero(n);
  s.alpha = alpha;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  return s;
}

Eigen::VectorXd adam_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& s) {
  if (theta.size() != grad.size() || s.m.size() != grad.size()) throw std::invalid_argument("gradient shape mismatch");
  ++s.t;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  return theta - s.alpha * ((s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.eps)).matrix();
}

QDiagnostic q_criterion(const StackedParams& x, const Eigen::MatrixXd& mu, const StackedParams& grads_at_x,
                        const GraphMatrices& m, double beta, const Eigen::MatrixXd& b) {
  if (x.rows() != m.A.cols() || grads_at_x.rows() != x.rows() || grads_at_x.cols() != x.cols())
    throw std::invalid_argument("stacked parameter shapes do not match");
  if (mu.rows() != m.A.rows() || mu.cols() != x.cols()) throw std::invalid_argument("multiplier shape does not match");
  Eigen::MatrixXd r = m.A * x;
  if (b.size() != 0) {
    if (b.rows() != r.rows() || b.cols() != r.cols()) throw std::invalid_argument("constraint offset shape mismatch");
    r -= b;
  }
  Eigen::MatrixXd g = grads_at_x + m.A.transpose() * mu + beta * (m.A.transpose() * r);
  QDiagnostic q;
  q.gradient_norm_sq = g.squaredNorm();
  q.constraint_violation_sq = r.squaredNorm();
  q.q_value = q.gradient_norm_sq + q.constraint_violation_sq;
  return q;
}

double potential(const StackedParams& x, const StackedParams& x_prev, const Eigen::MatrixXd& mu, double c, double beta,
                 double f_value, const GraphMatrices& m) {
  if (!(c > 0.0) || !(beta > 0.0)) throw std::invalid_argument("potential needs c > 0 and beta > 0");
  Eigen::MatrixXd r = m.A * x;
  Eigen::MatrixXd dx = m.B * (x - x_prev);
  const double viol = r.squaredNorm();
  return f_value + (mu.array() * r.array()).sum() + 0.5 * beta * viol + 0.5 * c * beta * (viol + dx.squaredNorm());
}

double disagreement(const StackedParams& theta) {
  Eigen::RowVectorXd mean = theta.colwise().mean();
  return (theta.rowwise() - mean).norm();
}

double mu_range_violation(const Eigen::MatrixXd& mu, const GraphMatrices& m) {
  // Residual of the least-squares fit mu ~ A y is the nullspace(A') part.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m.A);
  Eigen::MatrixXd y = cod.solve(mu);
  return (mu - m.A * y).norm();
}

}  // namespace vprop
