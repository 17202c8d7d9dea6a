#include "pelu/activations.hpp"

#include <algorithm>
#include <cctype>

namespace pelu {

namespace {

std::string lowered(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::string_view to_string(ParamConfig config) {
  switch (config) {
    case ParamConfig::A_B: return "a_b";
    case ParamConfig::A_INVB: return "a_invb";
    case ParamConfig::INVA_B: return "inva_b";
    case ParamConfig::INVA_INVB: return "inva_invb";
  }
  return "?";
}

ParamConfig parse_param_config(std::string_view text) {
  const std::string key = lowered(text);
  if (key == "a_b" || key == "(a,b)") return ParamConfig::A_B;
  if (key == "a_invb" || key == "(a,1/b)") return ParamConfig::A_INVB;
  if (key == "inva_b" || key == "(1/a,b)") return ParamConfig::INVA_B;
  if (key == "inva_invb" || key == "(1/a,1/b)") return ParamConfig::INVA_INVB;
  throw std::invalid_argument("unknown parameter configuration '" + std::string(text) + "'");
}

std::string_view to_string(ActivationType type) {
  switch (type) {
    case ActivationType::PELU: return "pelu";
    case ActivationType::ELU: return "elu";
    case ActivationType::RELU: return "relu";
    case ActivationType::LRELU: return "lrelu";
    case ActivationType::PRELU: return "prelu";
  }
  return "?";
}

ActivationType parse_activation_type(std::string_view text) {
  const std::string key = lowered(text);
  if (key == "pelu") return ActivationType::PELU;
  if (key == "elu") return ActivationType::ELU;
  if (key == "relu") return ActivationType::RELU;
  if (key == "lrelu") return ActivationType::LRELU;
  if (key == "prelu") return ActivationType::PRELU;
  throw std::invalid_argument("unknown activation '" + std::string(text) + "'");
}

}  // namespace pelu
