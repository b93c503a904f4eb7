#include "autoal/optimizer.hpp"

#include <cmath>

#include "autoal/errors.hpp"

namespace autoal {

Optimizer Optimizer::sgd(SgdOptions options) {
  if (options.learning_rate <= 0.0) throw InputError("sgd: learning rate must be > 0");
  Optimizer o;
  o.kind_ = Kind::kSgd;
  o.sgd_ = options;
  return o;
}

Optimizer Optimizer::adam(AdamOptions options) {
  if (options.learning_rate <= 0.0) throw InputError("adam: learning rate must be > 0");
  Optimizer o;
  o.kind_ = Kind::kAdam;
  o.adam_ = options;
  return o;
}

double Optimizer::learning_rate() const {
  return kind_ == Kind::kSgd ? sgd_.learning_rate : adam_.learning_rate;
}

void Optimizer::update_block(std::vector<double>& params,
                             const std::vector<double>& grads, Slot& slot) {
  if (params.size() != grads.size())
    throw ShapeError("optimizer: gradient shape mismatch");
  if (slot.m1.empty()) {
    slot.m1.assign(params.size(), 0.0);
    if (kind_ == Kind::kAdam) slot.m2.assign(params.size(), 0.0);
  } else if (slot.m1.size() != params.size()) {
    throw ShapeError("optimizer: parameter shape changed between steps");
  }

  if (kind_ == Kind::kSgd) {
    if (sgd_.momentum == 0.0) {
      for (std::size_t i = 0; i < params.size(); ++i)
        params[i] -= sgd_.learning_rate * grads[i];
    } else {
      for (std::size_t i = 0; i < params.size(); ++i) {
        slot.m1[i] = sgd_.momentum * slot.m1[i] + grads[i];
        params[i] -= sgd_.learning_rate * slot.m1[i];
      }
    }
    return;
  }

  const double bc1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(timestep_));
  const double bc2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(timestep_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    slot.m1[i] = adam_.beta1 * slot.m1[i] + (1.0 - adam_.beta1) * grads[i];
    slot.m2[i] = adam_.beta2 * slot.m2[i] + (1.0 - adam_.beta2) * grads[i] * grads[i];
    const double m_hat = slot.m1[i] / bc1;
    const double v_hat = slot.m2[i] / bc2;
    params[i] -= adam_.learning_rate * m_hat / (std::sqrt(v_hat) + adam_.epsilon);
  }
}

void Optimizer::step(Mlp& net, const Gradients& grads) {
  if (grads.weights.size() != net.num_layers() ||
      grads.biases.size() != net.num_layers())
    throw ShapeError("optimizer: gradient layer count mismatch");
  if (net_slots_.empty()) net_slots_.resize(2 * net.num_layers());
  ++timestep_;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    if (grads.weights[l].rows() != net.weights()[l].rows() ||
        grads.weights[l].cols() != net.weights()[l].cols())
      throw ShapeError("optimizer: weight gradient shape mismatch");
    update_block(net.weights()[l].data(), grads.weights[l].data(), net_slots_[2 * l]);
    update_block(net.biases()[l], grads.biases[l], net_slots_[2 * l + 1]);
  }
}

void Optimizer::step(std::vector<double>& params, const std::vector<double>& grads) {
  ++timestep_;
  update_block(params, grads, flat_slot_);
}

}  // namespace autoal
