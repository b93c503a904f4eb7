#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "autoal/matrix.hpp"

namespace autoal {

enum class Activation { kTanh, kRelu };

// Forward-pass behaviour. Dropout masks are resampled per forward pass only
// in kTrain or kMcSample; kEval is deterministic.
enum class Mode { kTrain, kEval, kMcSample };

// Everything a backward pass needs from the matching forward pass.
struct Tape {
  Matrix input;
  std::vector<Matrix> pre_acts;       // z_l for every layer, output included
  std::vector<Matrix> post_acts;      // h_l per hidden layer, after dropout
  std::vector<Matrix> dropout_masks;  // per hidden layer; empty when inactive
  std::uint64_t pass_id = 0;
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

// Fully connected network: input d, hidden sizes, output width, linear output
// layer. Dropout (inverted scaling) after each hidden activation. The RNG is
// instance-local; no global state.
class Mlp {
 public:
  Mlp(std::vector<std::size_t> layer_dims, Activation activation,
      double dropout_rate, std::uint64_t seed);

  // Returns logits [B x out] plus the tape for backward. Throws InputError on
  // non-finite input, ShapeError on width mismatch, TrainingError if the
  // parameters have diverged to a non-finite output.
  std::pair<Matrix, Tape> forward(const Matrix& x);

  // Analytic gradients for all parameters given dLoss/dLogits. An optional
  // extra gradient can be injected at each hidden layer's post-dropout
  // activation (used by the loss-prediction head). The tape must come from
  // the immediately preceding forward on this net, else StateError.
  Gradients backward(const Tape& tape, const Matrix& upstream,
                     const std::vector<Matrix>* hidden_upstream = nullptr) const;

  Gradients zero_gradients() const;

  std::size_t num_layers() const { return weights_.size(); }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  Activation activation() const { return activation_; }
  double dropout_rate() const { return dropout_rate_; }

  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

  std::vector<Matrix>& weights() { return weights_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  std::vector<std::vector<double>>& biases() { return biases_; }
  const std::vector<std::vector<double>>& biases() const { return biases_; }

 private:
  std::vector<std::size_t> dims_;
  Activation activation_;
  double dropout_rate_;
  Mode mode_ = Mode::kTrain;
  std::vector<Matrix> weights_;  // weights_[l] is dims_[l] x dims_[l+1]
  std::vector<std::vector<double>> biases_;
  mutable std::mt19937_64 rng_;
  std::uint64_t pass_counter_ = 0;
};

// FNV-style hash over all parameter bytes; used by detachment contracts.
std::uint64_t parameter_hash(const Mlp& net);

// Row-wise softmax, stabilized by row-max subtraction.
Matrix softmax_rows(const Matrix& logits);

struct CrossEntropy {
  std::vector<double> per_sample;
  double mean = 0.0;
};

// per_sample[j] = -log(max(probs[j, labels[j]], 1e-12)). Labels must lie in
// [0, cols); otherwise InputError.
CrossEntropy cross_entropy(const Matrix& probs, std::span<const int> labels);

// dLoss/dLogits for loss = scale * sum_j weight_j * ce_j, where ce_j is the
// softmax cross-entropy of row j. Standard (p - onehot) identity.
Matrix softmax_ce_logit_grad(const Matrix& probs, std::span<const int> labels,
                             std::span<const double> weights, double scale);

// T stochastic softmaxed passes in mc-sample mode; deterministic given seed.
// Restores the net's previous mode. T < 2 -> InputError.
std::vector<Matrix> mc_dropout_predict(Mlp& net, const Matrix& x, int passes,
                                       std::uint64_t seed);

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace autoal
