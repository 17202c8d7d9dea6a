#include "pelu/optim.hpp"

#include <algorithm>
#include <stdexcept>

#include "pelu/activations.hpp"

namespace pelu {

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be non-negative");
}

void step_unconstrained(std::span<double> param, std::span<const double> grad, std::span<double> velocity,
                        const SgdConfig& cfg, double weight_decay) {
  if (param.size() != grad.size() || param.size() != velocity.size()) {
    throw ShapeError("step_unconstrained: parameter, gradient and velocity sizes differ");
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = cfg.momentum * velocity[i] - cfg.learning_rate * (grad[i] + weight_decay * param[i]);
    param[i] += velocity[i];
  }
}

void step_unconstrained(Tensord& param, const Tensord& grad, Tensord& velocity, const SgdConfig& cfg) {
  detail::require_same_shape(param, grad, "step_unconstrained");
  detail::require_same_shape(param, velocity, "step_unconstrained");
  step_unconstrained(param.data(), grad.data(), velocity.data(), cfg, cfg.weight_decay);
}

ConstrainedState step_constrained(double value, double grad, double velocity, const SgdConfig& cfg,
                                  double weight_decay) {
  const double delta = cfg.momentum * velocity - cfg.learning_rate * (grad + weight_decay * value);
  return {std::max(value + delta, kParamFloor), delta};
}

void sgd_step(const ParamRegistry& params, const SgdConfig& cfg) {
  for (const ParamRef& param : params) {
    const bool decayed = param.decay && (!param.activation || cfg.decay_on_activation_params);
    const double decay = decayed ? cfg.weight_decay : 0.0;
    if (param.constrained) {
      for (std::size_t i = 0; i < param.value.size(); ++i) {
        const auto next = step_constrained(param.value[i], param.grad[i], param.velocity[i], cfg, decay);
        param.value[i] = next.value;
        param.velocity[i] = next.velocity;
      }
    } else {
      step_unconstrained(param.value, param.grad, param.velocity, cfg, decay);
    }
  }
}

}  // namespace pelu
