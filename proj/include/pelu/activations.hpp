#ifndef PELU_ACTIVATIONS_HPP
#define PELU_ACTIVATIONS_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "pelu/errors.hpp"
#include "pelu/tensor.hpp"

namespace pelu {

/// Which of {a, 1/a} x {b, 1/b} is stored and learned.
enum class ParamConfig { A_B, A_INVB, INVA_B, INVA_INVB };

inline constexpr ParamConfig kDefaultParamConfig = ParamConfig::A_INVB;

/// Floor applied to stored PELU parameters after every update.
inline constexpr double kParamFloor = 0.1;

std::string_view to_string(ParamConfig config);
ParamConfig parse_param_config(std::string_view text);

inline bool stores_reciprocal_a(ParamConfig c) {
  return c == ParamConfig::INVA_B || c == ParamConfig::INVA_INVB;
}
inline bool stores_reciprocal_b(ParamConfig c) {
  return c == ParamConfig::A_INVB || c == ParamConfig::INVA_INVB;
}

/// Layer-wise PELU state: stored values p, q (a or 1/a, b or 1/b depending
/// on the configuration) and their momentum buffers.
template <typename Scalar>
struct PeluParams {
  Scalar p = Scalar(1);
  Scalar q = Scalar(1);
  Scalar vp = Scalar(0);
  Scalar vq = Scalar(0);
  ParamConfig config = kDefaultParamConfig;

  /// Stored values such that the effective (a, b) equal the given pair.
  static PeluParams from_effective(Scalar a, Scalar b, ParamConfig config) {
    PeluParams params;
    params.config = config;
    params.p = stores_reciprocal_a(config) ? Scalar(1) / a : a;
    params.q = stores_reciprocal_b(config) ? Scalar(1) / b : b;
    return params;
  }
};

template <typename Scalar>
struct EffectiveParams {
  Scalar a;
  Scalar b;
};

template <typename Scalar>
EffectiveParams<Scalar> effective_params(const PeluParams<Scalar>& params) {
  return {stores_reciprocal_a(params.config) ? Scalar(1) / params.p : params.p,
          stores_reciprocal_b(params.config) ? Scalar(1) / params.q : params.q};
}

template <typename Scalar>
struct ParamGradient {
  Scalar da = Scalar(0);
  Scalar db = Scalar(0);
};

/// Chain-rules gradients with respect to effective (a, b) into gradients with
/// respect to the stored (p, q). For a reciprocal-stored parameter a = 1/p,
/// dE/dp = dE/da * (-1 / p^2).
template <typename Scalar>
ParamGradient<Scalar> stored_gradient(const PeluParams<Scalar>& params, ParamGradient<Scalar> effective) {
  ParamGradient<Scalar> out = effective;
  if (stores_reciprocal_a(params.config)) out.da = -effective.da / (params.p * params.p);
  if (stores_reciprocal_b(params.config)) out.db = -effective.db / (params.q * params.q);
  return out;
}

// Pointwise PELU. h == 0 belongs to the linear branch. The exponent h/b is
// clamped at -60 before exp.

namespace detail {

template <typename Scalar>
Scalar guarded_exp(Scalar x) {
  return std::exp(std::max(x, Scalar(-60)));
}

template <typename Scalar>
void require_positive(Scalar a, Scalar b) {
  if (!(a > Scalar(0)) || !(b > Scalar(0))) {
    throw std::invalid_argument("PELU parameters must be positive, got a=" + std::to_string(double(a)) +
                                " b=" + std::to_string(double(b)));
  }
}

}  // namespace detail

template <typename Scalar>
Scalar pelu(Scalar h, Scalar a, Scalar b) {
  return h >= Scalar(0) ? (a / b) * h : a * std::expm1(std::max(h / b, Scalar(-60)));
}

/// df/dh.
template <typename Scalar>
Scalar pelu_derivative(Scalar h, Scalar a, Scalar b) {
  return h >= Scalar(0) ? a / b : (a / b) * detail::guarded_exp(h / b);
}

/// df/da.
template <typename Scalar>
Scalar pelu_grad_a(Scalar h, Scalar /*a*/, Scalar b) {
  return h >= Scalar(0) ? h / b : std::expm1(std::max(h / b, Scalar(-60)));
}

/// df/db. The negative branch carries the factor h that differentiating
/// a * (exp(h/b) - 1) with respect to b produces.
template <typename Scalar>
Scalar pelu_grad_b(Scalar h, Scalar a, Scalar b) {
  const Scalar base = -a * h / (b * b);
  return h >= Scalar(0) ? base : base * detail::guarded_exp(h / b);
}

template <typename Scalar>
Tensor<Scalar> pelu_forward(const Tensor<Scalar>& h, Scalar a, Scalar b) {
  detail::require_positive(a, b);
  return map(h, [a, b](Scalar x) { return pelu(x, a, b); });
}

template <typename Scalar>
Tensor<Scalar> pelu_backward_input(const Tensor<Scalar>& h, Scalar a, Scalar b, const Tensor<Scalar>& upstream) {
  detail::require_same_shape(h, upstream, "pelu_backward_input");
  detail::require_positive(a, b);
  Tensor<Scalar> out(h.shape());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = upstream[i] * pelu_derivative(h[i], a, b);
  return out;
}

/// Sums upstream * (df/da, df/db) over all elements; gradients are with
/// respect to the effective parameters.
template <typename Scalar>
ParamGradient<Scalar> pelu_backward_params(const Tensor<Scalar>& h, Scalar a, Scalar b,
                                           const Tensor<Scalar>& upstream) {
  detail::require_same_shape(h, upstream, "pelu_backward_params");
  detail::require_positive(a, b);
  ParamGradient<Scalar> grad;
  for (std::size_t i = 0; i < h.size(); ++i) {
    grad.da += upstream[i] * pelu_grad_a(h[i], a, b);
    grad.db += upstream[i] * pelu_grad_b(h[i], a, b);
  }
  return grad;
}

/// Same as pelu_backward_params, chain-ruled to the stored (p, q).
template <typename Scalar>
ParamGradient<Scalar> pelu_backward_stored(const Tensor<Scalar>& h, const PeluParams<Scalar>& params,
                                           const Tensor<Scalar>& upstream) {
  const auto [a, b] = effective_params(params);
  return stored_gradient(params, pelu_backward_params(h, a, b, upstream));
}

// Baselines.

enum class ActivationType { PELU, ELU, RELU, LRELU, PRELU };

std::string_view to_string(ActivationType type);
ActivationType parse_activation_type(std::string_view text);

/// Activation choice. `slope` is the fixed negative slope for LReLU and the
/// initial learned slope for PReLU; `alpha` is ELU's saturation scale.
struct ActivationKind {
  ActivationType type = ActivationType::PELU;
  double slope = 0.0;
  double alpha = 1.0;

  static ActivationKind pelu() { return {ActivationType::PELU}; }
  static ActivationKind elu(double alpha = 1.0) { return {ActivationType::ELU, 0.0, alpha}; }
  static ActivationKind relu() { return {ActivationType::RELU}; }
  static ActivationKind lrelu(double slope = 0.1) {
    if (!(slope > 0.0)) throw std::invalid_argument("LReLU slope must be positive");
    return {ActivationType::LRELU, slope};
  }
  static ActivationKind prelu() { return {ActivationType::PRELU, 0.25}; }
};

template <typename Scalar>
Scalar baseline(ActivationType type, Scalar h, Scalar slope, Scalar alpha = Scalar(1)) {
  switch (type) {
    case ActivationType::RELU: return std::max(h, Scalar(0));
    case ActivationType::LRELU:
    case ActivationType::PRELU: return std::max(h, Scalar(0)) + slope * std::min(h, Scalar(0));
    case ActivationType::ELU: return h >= Scalar(0) ? h : alpha * std::expm1(std::max(h, Scalar(-60)));
    case ActivationType::PELU: break;
  }
  throw std::invalid_argument("baseline: PELU is not a baseline activation");
}

template <typename Scalar>
Scalar baseline_derivative(ActivationType type, Scalar h, Scalar slope, Scalar alpha = Scalar(1)) {
  switch (type) {
    case ActivationType::RELU: return h > Scalar(0) ? Scalar(1) : Scalar(0);
    case ActivationType::LRELU:
    case ActivationType::PRELU: return h > Scalar(0) ? Scalar(1) : slope;
    case ActivationType::ELU: return h >= Scalar(0) ? Scalar(1) : alpha * detail::guarded_exp(h);
    case ActivationType::PELU: break;
  }
  throw std::invalid_argument("baseline_derivative: PELU is not a baseline activation");
}

template <typename Scalar>
Tensor<Scalar> baseline_forward(const ActivationKind& kind, const Tensor<Scalar>& h, Scalar slope) {
  const Scalar alpha = Scalar(kind.alpha);
  return map(h, [&](Scalar x) { return baseline(kind.type, x, slope, alpha); });
}

template <typename Scalar>
struct BaselineGradient {
  Tensor<Scalar> input;
  Scalar slope = Scalar(0);  // PReLU only: sum of upstream * min(h, 0)
};

template <typename Scalar>
BaselineGradient<Scalar> baseline_backward(const ActivationKind& kind, const Tensor<Scalar>& h, Scalar slope,
                                           const Tensor<Scalar>& upstream) {
  detail::require_same_shape(h, upstream, "baseline_backward");
  const Scalar alpha = Scalar(kind.alpha);
  BaselineGradient<Scalar> grad{Tensor<Scalar>(h.shape())};
  for (std::size_t i = 0; i < h.size(); ++i) {
    grad.input[i] = upstream[i] * baseline_derivative(kind.type, h[i], slope, alpha);
    if (kind.type == ActivationType::PRELU) grad.slope += upstream[i] * std::min(h[i], Scalar(0));
  }
  return grad;
}

}  // namespace pelu

#endif  // PELU_ACTIVATIONS_HPP
