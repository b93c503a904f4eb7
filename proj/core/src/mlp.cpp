#include "autoal/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "autoal/errors.hpp"

namespace autoal {

namespace {

constexpr double kProbFloor = 1e-12;

double activate(Activation act, double z) {
  return act == Activation::kTanh ? std::tanh(z) : std::max(z, 0.0);
}

double activate_grad(Activation act, double z) {
  if (act == Activation::kTanh) {
    const double t = std::tanh(z);
    return 1.0 - t * t;
  }
  return z > 0.0 ? 1.0 : 0.0;
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> layer_dims, Activation activation,
         double dropout_rate, std::uint64_t seed)
    : dims_(std::move(layer_dims)),
      activation_(activation),
      dropout_rate_(dropout_rate),
      rng_(seed) {
  if (dims_.size() < 2) throw InputError("Mlp: need at least input and output dims");
  if (dropout_rate_ < 0.0 || dropout_rate_ >= 1.0)
    throw InputError("Mlp: dropout rate must lie in [0, 1)");
  for (std::size_t d : dims_)
    if (d == 0) throw InputError("Mlp: zero layer width");

  weights_.reserve(dims_.size() - 1);
  biases_.reserve(dims_.size() - 1);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const std::size_t fan_in = dims_[l];
    const std::size_t fan_out = dims_[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(fan_in, fan_out);
    for (double& v : w.data()) v = dist(rng_);
    weights_.push_back(std::move(w));
    biases_.emplace_back(fan_out, 0.0);
  }
}

std::pair<Matrix, Tape> Mlp::forward(const Matrix& x) {
  if (x.rows() == 0) throw InputError("forward: empty batch");
  if (x.cols() != input_dim()) throw ShapeError("forward: input width mismatch");
  if (!x.all_finite()) throw InputError("forward: non-finite input");

  Tape tape;
  tape.input = x;
  tape.pass_id = ++pass_counter_;

  const bool dropout_active =
      dropout_rate_ > 0.0 && mode_ != Mode::kEval;
  std::bernoulli_distribution keep(1.0 - dropout_rate_);

  const std::size_t hidden_layers = num_layers() - 1;
  Matrix h = x;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    Matrix z = h.matmul(weights_[l]);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto row = z.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += biases_[l][j];
    }
    tape.pre_acts.push_back(z);
    if (l < hidden_layers) {
      Matrix a(z.rows(), z.cols());
      for (std::size_t i = 0; i < z.size(); ++i)
        a.data()[i] = activate(activation_, z.data()[i]);
      if (dropout_active) {
        Matrix mask(z.rows(), z.cols());
        const double scale = 1.0 / (1.0 - dropout_rate_);
        for (double& m : mask.data()) m = keep(rng_) ? scale : 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] *= mask.data()[i];
        tape.dropout_masks.push_back(std::move(mask));
      }
      tape.post_acts.push_back(a);
      h = std::move(a);
    } else {
      h = std::move(z);
    }
  }
  if (!h.all_finite()) throw TrainingError("forward: non-finite logits");
  return {std::move(h), std::move(tape)};
}

Gradients Mlp::backward(const Tape& tape, const Matrix& upstream,
                        const std::vector<Matrix>* hidden_upstream) const {
  if (tape.pass_id != pass_counter_)
    throw StateError("backward: tape is stale (forward/backward pairing violated)");
  if (upstream.rows() != tape.input.rows() || upstream.cols() != output_dim())
    throw ShapeError("backward: upstream shape mismatch");
  const std::size_t hidden_layers = num_layers() - 1;
  if (hidden_upstream && hidden_upstream->size() != hidden_layers)
    throw ShapeError("backward: hidden upstream count mismatch");

  Gradients grads = zero_gradients();
  Matrix delta = upstream;  // dLoss/dz of the current layer, walking down

  for (std::size_t l = num_layers(); l-- > 0;) {
    const Matrix& below = l == 0 ? tape.input : tape.post_acts[l - 1];
    grads.weights[l] = below.transposed().matmul(delta);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      auto row = delta.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) grads.biases[l][j] += row[j];
    }
    if (l == 0) break;

    Matrix dh = delta.matmul(weights_[l].transposed());
    if (hidden_upstream && !(*hidden_upstream)[l - 1].empty())
      dh.add_inplace((*hidden_upstream)[l - 1]);
    if (!tape.dropout_masks.empty()) {
      const Matrix& mask = tape.dropout_masks[l - 1];
      for (std::size_t i = 0; i < dh.size(); ++i) dh.data()[i] *= mask.data()[i];
    }
    const Matrix& z = tape.pre_acts[l - 1];
    for (std::size_t i = 0; i < dh.size(); ++i)
      dh.data()[i] *= activate_grad(activation_, z.data()[i]);
    delta = std::move(dh);
  }
  return grads;
}

Gradients Mlp::zero_gradients() const {
  Gradients g;
  g.weights.reserve(num_layers());
  g.biases.reserve(num_layers());
  for (std::size_t l = 0; l < num_layers(); ++l) {
    g.weights.emplace_back(weights_[l].rows(), weights_[l].cols());
    g.biases.emplace_back(biases_[l].size(), 0.0);
  }
  return g;
}

std::uint64_t parameter_hash(const Mlp& net) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffULL;
      h *= 1099511628211ULL;
    }
  };
  for (const Matrix& w : net.weights())
    for (double v : w.data()) mix(v);
  for (const auto& b : net.biases())
    for (double v : b) mix(v);
  return h;
}

Matrix softmax_rows(const Matrix& logits) {
  if (!logits.all_finite()) throw InputError("softmax_rows: non-finite logits");
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto in = logits.row(i);
    auto res = out.row(i);
    double m = in[0];
    for (double v : in) m = std::max(m, v);
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      res[j] = std::exp(in[j] - m);
      sum += res[j];
    }
    for (double& v : res) v /= sum;
  }
  return out;
}

CrossEntropy cross_entropy(const Matrix& probs, std::span<const int> labels) {
  if (labels.size() != probs.rows())
    throw ShapeError("cross_entropy: label count mismatch");
  CrossEntropy ce;
  ce.per_sample.resize(probs.rows());
  for (std::size_t j = 0; j < probs.rows(); ++j) {
    const int y = labels[j];
    if (y < 0 || static_cast<std::size_t>(y) >= probs.cols())
      throw InputError("cross_entropy: label out of range");
    ce.per_sample[j] = -std::log(std::max(probs(j, static_cast<std::size_t>(y)),
                                          kProbFloor));
    ce.mean += ce.per_sample[j];
  }
  ce.mean /= static_cast<double>(probs.rows());
  return ce;
}

Matrix softmax_ce_logit_grad(const Matrix& probs, std::span<const int> labels,
                             std::span<const double> weights, double scale) {
  if (labels.size() != probs.rows() || weights.size() != probs.rows())
    throw ShapeError("softmax_ce_logit_grad: row count mismatch");
  Matrix grad(probs.rows(), probs.cols());
  for (std::size_t j = 0; j < probs.rows(); ++j) {
    const double w = weights[j] * scale;
    auto p = probs.row(j);
    auto g = grad.row(j);
    for (std::size_t c = 0; c < p.size(); ++c) g[c] = w * p[c];
    g[static_cast<std::size_t>(labels[j])] -= w;
  }
  return grad;
}

std::vector<Matrix> mc_dropout_predict(Mlp& net, const Matrix& x, int passes,
                                       std::uint64_t seed) {
  if (passes < 2) throw InputError("mc_dropout_predict: need at least 2 passes");
  const Mode saved = net.mode();
  net.set_mode(Mode::kMcSample);
  net.reseed(seed);
  std::vector<Matrix> stack;
  stack.reserve(static_cast<std::size_t>(passes));
  for (int t = 0; t < passes; ++t)
    stack.push_back(softmax_rows(net.forward(x).first));
  net.set_mode(saved);
  return stack;
}

}  // namespace autoal
