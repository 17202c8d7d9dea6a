#ifndef PELU_ANALYSIS_HPP
#define PELU_ANALYSIS_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "pelu/activations.hpp"

namespace pelu {

// Vanishing-gradient analysis of a one-neuron-per-layer chain.
//
// For a weight w feeding a PELU with parameters (a, b), the per-layer
// gradient multiplier is f'(w h) w. On the negative side it equals
// w (a/b) exp(w h / b), which is monotone in h, so the set of h < 0 with a
// multiplier of at least one is an interval [-l(w), 0) with
//
//   l(w) = |log(b / (a w))| * b / w,      valid for w >= b / a,
//
// maximized at w* = e b / a where l* = a / e.

/// f'(w h) * w for PELU(a, b).
template <typename Scalar>
Scalar amplification(Scalar w, Scalar h, Scalar a, Scalar b) {
  return pelu_derivative(w * h, a, b) * w;
}

template <typename Scalar>
Scalar interval_length(Scalar w, Scalar a, Scalar b) {
  detail::require_positive(a, b);
  if (w < b / a) {
    throw std::domain_error("interval_length requires w >= b/a (w=" + std::to_string(double(w)) +
                            ", b/a=" + std::to_string(double(b / a)) + ")");
  }
  return std::abs(std::log((b / a) / w)) * (b / w);
}

template <typename Scalar>
struct WeightOptimum {
  Scalar w_star;
  Scalar l_star;
};

template <typename Scalar>
WeightOptimum<Scalar> optimal_weight(Scalar a, Scalar b) {
  detail::require_positive(a, b);
  return {std::numbers::e_v<Scalar> * b / a, a / std::numbers::e_v<Scalar>};
}

/// Length of {h < 0 : amplification(w, h) >= 1} found by bisection on the
/// monotone negative branch, independent of the closed form.
template <typename Scalar>
Scalar empirical_interval_length(Scalar w, Scalar a, Scalar b, Scalar tolerance = Scalar(1e-12)) {
  detail::require_positive(a, b);
  if (w < b / a) throw std::domain_error("empirical_interval_length requires w >= b/a");
  auto residual = [&](Scalar h) { return amplification(w, h, a, b) - Scalar(1); };
  if (residual(Scalar(0)) <= tolerance) return Scalar(0);

  Scalar lo = -Scalar(1);
  Scalar hi = Scalar(0);
  while (residual(lo) >= Scalar(0)) {
    hi = lo;
    lo *= Scalar(2);
  }
  for (int iter = 0; iter < 2000; ++iter) {
    const Scalar mid = lo + (hi - lo) / Scalar(2);
    const Scalar r = residual(mid);
    if (std::abs(r) <= tolerance || mid == lo || mid == hi) return -mid;
    (r < Scalar(0) ? lo : hi) = mid;
  }
  return -(lo + (hi - lo) / Scalar(2));
}

template <typename Scalar>
struct BruteForceOptimum {
  Scalar w_best;
  Scalar l_best;
  Scalar resolution;           // grid spacing
  Scalar max_root_discrepancy; // max |closed form - bisection| over the grid
  std::vector<Scalar> w;       // the grid
  std::vector<Scalar> length;  // closed-form l(w) on the grid
};

/// Scans l(w) on `points` evenly spaced weights over [b/a, w_max] and
/// cross-checks every grid value against the bisection interval. Throws if
/// the maximum sits on a grid endpoint (the grid does not bracket the
/// optimum).
template <typename Scalar>
BruteForceOptimum<Scalar> brute_force_optimum(Scalar a, Scalar b, Scalar w_max, std::size_t points) {
  detail::require_positive(a, b);
  const Scalar w_min = b / a;
  if (points < 3 || !(w_max > w_min)) {
    throw std::invalid_argument("brute_force_optimum: need >= 3 points and w_max > b/a");
  }
  BruteForceOptimum<Scalar> out{};
  out.resolution = (w_max - w_min) / Scalar(points - 1);
  out.w.resize(points);
  out.length.resize(points);
  std::size_t best = 0;
  for (std::size_t i = 0; i < points; ++i) {
    const Scalar w = i + 1 == points ? w_max : w_min + out.resolution * Scalar(i);
    out.w[i] = w;
    out.length[i] = interval_length(w, a, b);
    const Scalar empirical = empirical_interval_length(w, a, b);
    out.max_root_discrepancy = std::max(out.max_root_discrepancy, std::abs(empirical - out.length[i]));
    if (out.length[i] > out.length[best]) best = i;
  }
  if (best == 0 || best + 1 == points) {
    throw std::domain_error("brute_force_optimum: grid [" + std::to_string(double(w_min)) + ", " +
                            std::to_string(double(w_max)) + "] does not bracket the optimum");
  }
  out.w_best = out.w[best];
  out.l_best = out.length[best];
  return out;
}

/// Default scan bound 10 e b / a.
template <typename Scalar>
Scalar default_w_max(Scalar a, Scalar b) {
  return Scalar(10) * std::numbers::e_v<Scalar> * b / a;
}

/// Scalar chain x = z_0, h_l = w_l z_{l-1}, z_l = f(h_l), E = (z_L - y)^2 / 2.
template <typename Scalar>
struct ChainNet {
  std::vector<Scalar> weights;
  ActivationKind activation = ActivationKind::pelu();
  Scalar a = Scalar(1);  // PELU only
  Scalar b = Scalar(1);

  std::size_t depth() const { return weights.size(); }

  Scalar f(Scalar h) const {
    if (activation.type == ActivationType::PELU) return pelu(h, a, b);
    return baseline(activation.type, h, Scalar(activation.slope), Scalar(activation.alpha));
  }
  Scalar df(Scalar h) const {
    if (activation.type == ActivationType::PELU) return pelu_derivative(h, a, b);
    return baseline_derivative(activation.type, h, Scalar(activation.slope), Scalar(activation.alpha));
  }
};

template <typename Scalar>
struct ChainTrace {
  std::vector<Scalar> h;  // h[l] for l = 1..L, h[0] unused
  std::vector<Scalar> z;  // z[0] = x
};

template <typename Scalar>
ChainTrace<Scalar> chain_forward(const ChainNet<Scalar>& net, Scalar x) {
  if (net.depth() == 0) throw std::invalid_argument("ChainNet needs at least one layer");
  ChainTrace<Scalar> trace;
  trace.h.assign(net.depth() + 1, Scalar(0));
  trace.z.assign(net.depth() + 1, Scalar(0));
  trace.z[0] = x;
  for (std::size_t l = 1; l <= net.depth(); ++l) {
    trace.h[l] = net.weights[l - 1] * trace.z[l - 1];
    trace.z[l] = net.f(trace.h[l]);
  }
  return trace;
}

template <typename Scalar>
Scalar chain_loss(const ChainNet<Scalar>& net, Scalar x, Scalar y) {
  const Scalar diff = chain_forward(net, x).z.back() - y;
  return diff * diff / Scalar(2);
}

/// dE/dw_l for every l = 1..L by reverse accumulation (index 0 unused).
template <typename Scalar>
std::vector<Scalar> chain_gradients(const ChainNet<Scalar>& net, Scalar x, Scalar y) {
  const auto trace = chain_forward(net, x);
  const std::size_t L = net.depth();
  std::vector<Scalar> grads(L + 1, Scalar(0));
  Scalar dz = trace.z[L] - y;
  for (std::size_t l = L; l >= 1; --l) {
    const Scalar dh = dz * net.df(trace.h[l]);
    grads[l] = dh * trace.z[l - 1];
    dz = dh * net.weights[l - 1];
  }
  return grads;
}

namespace detail {
template <typename Scalar>
void require_layer(const ChainNet<Scalar>& net, std::size_t k) {
  if (k < 1 || k > net.depth()) {
    throw std::out_of_range("layer index " + std::to_string(k) + " outside [1, " +
                            std::to_string(net.depth()) + "]");
  }
}
}  // namespace detail

template <typename Scalar>
Scalar chain_gradient(const ChainNet<Scalar>& net, Scalar x, Scalar y, std::size_t k) {
  detail::require_layer(net, k);
  return chain_gradients(net, x, y)[k];
}

/// Closed product z_{k-1} f'(h_k) [prod_{j>k} f'(h_j) w_j] dE/dz_L.
template <typename Scalar>
Scalar chain_gradient_formula(const ChainNet<Scalar>& net, Scalar x, Scalar y, std::size_t k) {
  detail::require_layer(net, k);
  const auto trace = chain_forward(net, x);
  Scalar product = Scalar(1);
  for (std::size_t j = k + 1; j <= net.depth(); ++j) product *= net.df(trace.h[j]) * net.weights[j - 1];
  return trace.z[k - 1] * net.df(trace.h[k]) * product * (trace.z.back() - y);
}

}  // namespace pelu

#endif  // PELU_ANALYSIS_HPP
