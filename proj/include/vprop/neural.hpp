#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vprop/rng.hpp"

namespace vprop {

enum class Head { identity, softmax };

/// Probability floor applied by the softmax head.
inline constexpr double kProbFloor = 1e-8;

struct MlpSpec {
  std::vector<int> widths;  // input, hidden..., output
  Head head = Head::identity;

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int n_layers() const { return static_cast<int>(widths.size()) - 1; }
  int n_params() const;
  void validate() const;  // throws std::invalid_argument

  bool operator==(const MlpSpec&) const = default;
};

/// Flat parameter storage. Layer l holds its weight matrix (out x in,
/// row-major) followed by its bias vector.
struct ParamVector {
  MlpSpec spec;
  Eigen::VectorXd values;
};

struct ForwardTape {
  std::vector<Eigen::VectorXd> inputs;  // input to each layer
  std::vector<Eigen::VectorXd> pre;     // pre-activation of each layer
  Eigen::VectorXd probs;                // unfloored softmax (softmax head only)
  Eigen::VectorXd output;
};

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);
ParamVector zero_params(const MlpSpec& spec);

Eigen::VectorXd forward(const ParamVector& params, const Eigen::VectorXd& input, ForwardTape& tape);
Eigen::VectorXd forward(const ParamVector& params, const Eigen::VectorXd& input);

/// Gradient of <output_gradient, output> with respect to the parameters.
Eigen::VectorXd backward(const ParamVector& params, const ForwardTape& tape, const Eigen::VectorXd& output_gradient);

/// Adds scale * backward(...) into `grad` without allocating a fresh vector.
void backward_accumulate(const ParamVector& params, const ForwardTape& tape, const Eigen::VectorXd& output_gradient,
                         double scale, Eigen::VectorXd& grad);

double log_prob(const ParamVector& policy, const Eigen::VectorXd& state, int action);

int sample_action(const ParamVector& policy, const Eigen::VectorXd& state, Rng& rng);

/// Draws an index from a probability vector with one uniform draw.
int sample_index(const Eigen::VectorXd& probs, Rng& rng);

Eigen::VectorXd finite_diff_grad(const Eigen::VectorXd& theta, const std::function<double(const Eigen::VectorXd&)>& loss,
                                 double h = 1e-6);

std::string params_to_json(const ParamVector& p);
ParamVector params_from_json(const std::string& text);

}  // namespace vprop
