#ifndef PELU_PARAMETER_HPP
#define PELU_PARAMETER_HPP

#include <span>
#include <string>
#include <vector>

namespace pelu {

/// Non-owning handle to one learnable parameter group held by a layer.
struct ParamRef {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
  std::span<double> velocity;
  bool decay = false;        // receives weight decay
  bool activation = false;   // PELU (p, q) or PReLU slope
  bool constrained = false;  // clamped at 0.1 after each step
};

using ParamRegistry = std::vector<ParamRef>;

}  // namespace pelu

#endif  // PELU_PARAMETER_HPP
