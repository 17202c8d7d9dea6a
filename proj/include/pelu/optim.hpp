#ifndef PELU_OPTIM_HPP
#define PELU_OPTIM_HPP

#include <span>

#include "pelu/parameter.hpp"
#include "pelu/tensor.hpp"

namespace pelu {

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  bool decay_on_activation_params = true;

  /// Throws std::invalid_argument unless lr > 0, 0 <= momentum < 1, decay >= 0.
  void validate() const;
};

/// v <- momentum * v - lr * (grad + decay * param); param <- param + v.
void step_unconstrained(std::span<double> param, std::span<const double> grad, std::span<double> velocity,
                        const SgdConfig& cfg, double weight_decay);

void step_unconstrained(Tensord& param, const Tensord& grad, Tensord& velocity, const SgdConfig& cfg);

struct ConstrainedState {
  double value;
  double velocity;
};

/// Momentum step followed by max{value + delta, 0.1}. The velocity keeps its
/// unclamped value. `weight_decay` is folded into the gradient.
ConstrainedState step_constrained(double value, double grad, double velocity, const SgdConfig& cfg,
                                  double weight_decay);

inline ConstrainedState step_constrained(double value, double grad, double velocity, const SgdConfig& cfg) {
  return step_constrained(value, grad, velocity, cfg, cfg.weight_decay);
}

/// One optimizer step over every registered parameter. Decay applies to
/// groups flagged `decay`; activation groups skip it when
/// `decay_on_activation_params` is off. Constrained groups use the clamped rule.
void sgd_step(const ParamRegistry& params, const SgdConfig& cfg);

}  // namespace pelu

#endif  // PELU_OPTIM_HPP
