#include "vprop/neural.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace vprop {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Below this density the first layer walks the nonzero inputs only; one-hot
// encodings of tabular states hit this path.
constexpr double kSparseDensity = 0.25;

}  // namespace

int MlpSpec::n_params() const {
  int n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) n += (widths[l] + 1) * widths[l + 1];
  return n;
}

void MlpSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("network spec needs at least two widths");
  for (int w : widths)
    if (w <= 0) throw std::invalid_argument("network widths must be positive");
  if (head == Head::softmax && widths.back() < 2) throw std::invalid_argument("softmax head needs output width >= 2");
}

ParamVector zero_params(const MlpSpec& spec) {
  spec.validate();
  return ParamVector{spec, Eigen::VectorXd::Zero(spec.n_params())};
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
  ParamVector p = zero_params(spec);
  Rng rng(seed);
  int off = 0;
  for (int l = 0; l < spec.n_layers(); ++l) {
    const int in = spec.widths[l], out = spec.widths[l + 1];
    const double a = std::sqrt(6.0 / (in + out));
    for (int k = 0; k < in * out; ++k) p.values(off + k) = rng.uniform(-a, a);
    off += in * out + out;
  }
  return p;
}

Eigen::VectorXd forward(const ParamVector& params, const Eigen::VectorXd& input, ForwardTape& tape) {
  const MlpSpec& spec = params.spec;
  if (input.size() != spec.input_dim()) throw std::invalid_argument("network input has wrong length");
  if (params.values.size() != spec.n_params()) throw std::invalid_argument("parameter vector length does not match spec");
  const int L = spec.n_layers();
  tape.inputs.resize(L);
  tape.pre.resize(L);
  const double* ptr = params.values.data();
  Eigen::VectorXd x = input;
  for (int l = 0; l < L; ++l) {
    const int in = spec.widths[l], out = spec.widths[l + 1];
    Eigen::Map<const RowMat> W(ptr, out, in);
    Eigen::Map<const Eigen::VectorXd> b(ptr + in * out, out);
    Eigen::VectorXd z = b;
    if (l == 0) {
      int nnz = 0;
      for (int c = 0; c < in; ++c) nnz += x(c) != 0.0;
      if (nnz < kSparseDensity * in) {
        for (int c = 0; c < in; ++c)
          if (x(c) != 0.0) z.noalias() += W.col(c) * x(c);
      } else {
        z.noalias() += W * x;
      }
    } else {
      z.noalias() += W * x;
    }
    tape.inputs[l] = std::move(x);
    tape.pre[l] = z;
    if (l + 1 < L) {
      x = z.cwiseMax(0.0);
    } else {
      x = std::move(z);
    }
    ptr += in * out + out;
  }
  if (spec.head == Head::softmax) {
    const int k = spec.output_dim();
    Eigen::VectorXd e = (x.array() - x.maxCoeff()).exp();
    tape.probs = e / e.sum();
    x = (kProbFloor + (1.0 - k * kProbFloor) * tape.probs.array()).matrix();
  }
  tape.output = x;
  return x;
}

Eigen::VectorXd forward(const ParamVector& params, const Eigen::VectorXd& input) {
  ForwardTape tape;
  return forward(params, input, tape);
}

void backward_accumulate(const ParamVector& params, const ForwardTape& tape, const Eigen::VectorXd& output_gradient,
                         double scale, Eigen::VectorXd& grad) {
  const MlpSpec& spec = params.spec;
  const int L = spec.n_layers();
  if (static_cast<int>(tape.pre.size()) != L || static_cast<int>(tape.inputs.size()) != L)
    throw std::invalid_argument("tape does not match network spec");
  if (output_gradient.size() != spec.output_dim()) throw std::invalid_argument("output gradient has wrong length");
  if (grad.size() != spec.n_params()) throw std::invalid_argument("gradient buffer has wrong length");

  Eigen::VectorXd dz;
  if (spec.head == Head::softmax) {
    const int k = spec.output_dim();
    const Eigen::VectorXd& p = tape.probs;
    const double inner = output_gradient.dot(p);
    dz = ((1.0 - k * kProbFloor) * scale) * (p.array() * (output_gradient.array() - inner)).matrix();
  } else {
    dz = scale * output_gradient;
  }

  std::vector<int> offsets(L);
  int off = 0;
  for (int l = 0; l < L; ++l) {
    offsets[l] = off;
    off += (spec.widths[l] + 1) * spec.widths[l + 1];
  }
  for (int l = L - 1; l >= 0; --l) {
    const int in = spec.widths[l], out = spec.widths[l + 1];
    const Eigen::VectorXd& x = tape.inputs[l];
    Eigen::Map<RowMat> gW(grad.data() + offsets[l], out, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets[l] + in * out, out);
    if (l == 0) {
      for (int c = 0; c < in; ++c)
        if (x(c) != 0.0) gW.col(c) += dz * x(c);
    } else {
      gW.noalias() += dz * x.transpose();
    }
    gb += dz;
    if (l > 0) {
      Eigen::Map<const RowMat> W(params.values.data() + offsets[l], out, in);
      Eigen::VectorXd dx = W.transpose() * dz;
      const Eigen::VectorXd& zprev = tape.pre[l - 1];
      for (int c = 0; c < in; ++c)
        if (!(zprev(c) > 0.0)) dx(c) = 0.0;
      dz = std::move(dx);
    }
  }
}

Eigen::VectorXd backward(const ParamVector& params, const ForwardTape& tape, const Eigen::VectorXd& output_gradient) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.spec.n_params());
  backward_accumulate(params, tape, output_gradient, 1.0, grad);
  return grad;
}

double log_prob(const ParamVector& policy, const Eigen::VectorXd& state, int action) {
  if (policy.spec.head != Head::softmax) throw std::invalid_argument("log_prob needs a softmax head");
  if (action < 0 || action >= policy.spec.output_dim()) throw std::invalid_argument("action index out of range");
  return std::log(forward(policy, state)(action));
}

int sample_index(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int a = 0; a < probs.size(); ++a) {
    acc += probs(a);
    if (u < acc) return a;
  }
  return static_cast<int>(probs.size()) - 1;
}

int sample_action(const ParamVector& policy, const Eigen::VectorXd& state, Rng& rng) {
  if (policy.spec.head != Head::softmax) throw std::invalid_argument("sample_action needs a softmax head");
  return sample_index(forward(policy, state), rng);
}

Eigen::VectorXd finite_diff_grad(const Eigen::VectorXd& theta, const std::function<double(const Eigen::VectorXd&)>& loss,
                                 double h) {
  Eigen::VectorXd g(theta.size());
  Eigen::VectorXd t = theta;
  for (int i = 0; i < theta.size(); ++i) {
    t(i) = theta(i) + h;
    const double fp = loss(t);
    t(i) = theta(i) - h;
    const double fm = loss(t);
    t(i) = theta(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

std::string params_to_json(const ParamVector& p) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["spec"] = p.spec.widths;
  j["head"] = p.spec.head == Head::softmax ? "softmax" : "identity";
  j["values"] = std::vector<double>(p.values.data(), p.values.data() + p.values.size());
  return j.dump();
}

ParamVector params_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  MlpSpec spec;
  spec.widths = j.at("spec").get<std::vector<int>>();
  std::string head = j.value("head", std::string("identity"));
  if (head == "softmax") {
    spec.head = Head::softmax;
  } else if (head == "identity") {
    spec.head = Head::identity;
  } else {
    throw std::invalid_argument("unknown network head '" + head + "'");
  }
  spec.validate();
  auto vals = j.at("values").get<std::vector<double>>();
  if (static_cast<int>(vals.size()) != spec.n_params()) throw std::invalid_argument("snapshot value count does not match spec");
  ParamVector p{spec, Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size())};
  return p;
}

}  // namespace vprop
