#pragma once

#include <vector>

#include "autoal/mlp.hpp"

namespace autoal {

struct SgdOptions {
  double learning_rate = 0.005;
  double momentum = 0.0;
};

struct AdamOptions {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Per-parameter moment buffers are allocated lazily on the first step and
// must keep matching shapes afterwards. One instance owns one parameter
// family: either a network or a flat vector, not both interleaved.
class Optimizer {
 public:
  static Optimizer sgd(SgdOptions options);
  static Optimizer adam(AdamOptions options);

  void step(Mlp& net, const Gradients& grads);
  void step(std::vector<double>& params, const std::vector<double>& grads);

  double learning_rate() const;

 private:
  enum class Kind { kSgd, kAdam };

  struct Slot {
    std::vector<double> m1;
    std::vector<double> m2;  // unused for SGD without momentum
  };

  void update_block(std::vector<double>& params, const std::vector<double>& grads,
                    Slot& slot);

  Kind kind_ = Kind::kSgd;
  SgdOptions sgd_{};
  AdamOptions adam_{};
  long timestep_ = 0;
  std::vector<Slot> net_slots_;  // weights then biases, layer-major
  Slot flat_slot_;
};

}  // namespace autoal
