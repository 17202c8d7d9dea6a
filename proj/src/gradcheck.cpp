#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "pelu/run.hpp"

namespace pelu {

namespace {

std::vector<std::size_t> parse_widths(const std::string& text) {
  std::vector<std::size_t> widths;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t pos = 0;
    const unsigned long value = std::stoul(item, &pos);
    if (pos != item.size() || value == 0) throw std::invalid_argument("bad width '" + item + "'");
    widths.push_back(value);
  }
  if (widths.size() < 2) throw std::invalid_argument("need at least two widths in '" + text + "'");
  return widths;
}

std::vector<std::string> selected_archs(const std::string& arch) {
  if (arch == "all") return {"mlp:2,16,16,3", "mlp-bn:2,8,3", "conv", "conv-bn-drop", "smallnet-lite"};
  return {arch};
}

struct ActivationChoice {
  ActivationKind kind;
  ParamConfig config;
  std::string label;
};

std::vector<ActivationChoice> selected_activations(const GradcheckOptions& opts) {
  std::vector<ParamConfig> configs;
  if (opts.param_config == "all") {
    configs = {ParamConfig::A_B, ParamConfig::A_INVB, ParamConfig::INVA_B, ParamConfig::INVA_INVB};
  } else {
    configs = {parse_param_config(opts.param_config)};
  }
  std::vector<ActivationType> types;
  if (opts.activation == "all") {
    types = {ActivationType::PELU, ActivationType::ELU, ActivationType::RELU, ActivationType::LRELU,
             ActivationType::PRELU};
  } else {
    types = {parse_activation_type(opts.activation)};
  }
  std::vector<ActivationChoice> out;
  for (ActivationType type : types) {
    switch (type) {
      case ActivationType::PELU:
        for (ParamConfig pc : configs) out.push_back({ActivationKind::pelu(), pc, "pelu(" + std::string(to_string(pc)) + ")"});
        break;
      case ActivationType::ELU: out.push_back({ActivationKind::elu(), kDefaultParamConfig, "elu"}); break;
      case ActivationType::RELU: out.push_back({ActivationKind::relu(), kDefaultParamConfig, "relu"}); break;
      case ActivationType::LRELU: out.push_back({ActivationKind::lrelu(0.1), kDefaultParamConfig, "lrelu"}); break;
      case ActivationType::PRELU: out.push_back({ActivationKind::prelu(), kDefaultParamConfig, "prelu"}); break;
    }
  }
  return out;
}

GradcheckCase build_case(const std::string& arch, const ActivationChoice& act, Rng& rng) {
  GradcheckCase c;
  c.name = arch + "/" + act.label;
  std::size_t classes = 3;
  if (arch.rfind("mlp:", 0) == 0 || arch.rfind("mlp-bn:", 0) == 0) {
    const bool bn = arch.rfind("mlp-bn:", 0) == 0;
    const auto widths = parse_widths(arch.substr(arch.find(':') + 1));
    classes = widths.back();
    c.net = make_mlp(widths, act.kind, act.config, rng, bn);
    c.input = Tensord({4, widths.front()});
  } else if (arch == "conv" || arch == "conv-bn-drop") {
    const bool extras = arch == "conv-bn-drop";
    c.net.emplace<Conv2d>(2, 3, rng);
    if (extras) c.net.emplace<BatchNorm>(3);
    c.net.emplace<Activation>(act.kind, act.config);
    c.net.emplace<MaxPool2x2>();
    if (extras) c.net.emplace<Dropout>(0.3, rng.next_u64());
    c.net.emplace<Flatten>();
    c.net.emplace<Linear>(3 * 3 * 3, classes, rng);
    c.input = Tensord({3, 2, 6, 6});
  } else if (arch == "smallnet-lite") {
    SmallNetSpec spec;
    spec.channels = 1;
    spec.height = spec.width = 8;
    spec.classes = classes;
    spec.filters = {2, 3, 4};
    spec.hidden = 5;
    c.net = make_smallnet_lite(spec, act.kind, act.config, rng);
    c.input = Tensord({2, 1, 8, 8});
  } else {
    throw std::invalid_argument("unknown gradcheck architecture '" + arch + "'");
  }
  for (double& v : c.input.data()) v = rng.normal();
  for (std::size_t i = 0; i < c.input.dim(0); ++i) c.labels.push_back(rng.below(classes));

  // Move every parameter off its initial value so that each gradient term is
  // exercised (PELU away from a = b = 1, nonzero biases, non-unit BN affine).
  for (std::size_t i = 0; i < c.net.size(); ++i) {
    if (auto* layer = dynamic_cast<Activation*>(&c.net.layer(i))) {
      if (layer->activation().type == ActivationType::PELU) {
        layer->pelu_params() =
            PeluParams<double>::from_effective(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), act.config);
      } else if (layer->activation().type == ActivationType::PRELU) {
        layer->set_slope(rng.uniform(0.05, 0.5));
      }
    } else if (auto* bn = dynamic_cast<BatchNorm*>(&c.net.layer(i))) {
      for (double& g : bn->gamma().data()) g = rng.uniform(0.5, 1.5);
      for (double& b : bn->beta().data()) b = rng.normal(0.0, 0.1);
    }
  }
  for (const auto& p : c.net.parameters()) {
    if (p.name.ends_with(".bias")) {
      for (double& v : p.value) v = rng.normal(0.0, 0.1);
    }
  }
  // Keep logits O(1) so the loss, and with it the finite-difference roundoff
  // of roughly eps * |loss| / step, stays small.
  for (std::size_t i = c.net.size(); i-- > 0;) {
    if (auto* last = dynamic_cast<Linear*>(&c.net.layer(i))) {
      for (double& w : last->weight().data()) w *= 0.25;
      break;
    }
  }
  return c;
}

}  // namespace

std::vector<GradcheckGroup> gradcheck_network(GradcheckCase& c, const GradcheckOptions& opts) {
  const std::uint64_t noise_seed = Rng(opts.seed).fork(99).seed();
  auto loss_at = [&](const Tensord& input) {
    c.net.reseed_noise(noise_seed);
    return softmax_xent(c.net.forward(input, Mode::Train), c.labels).loss;
  };

  c.net.reseed_noise(noise_seed);
  const auto xent = softmax_xent(c.net.forward(c.input, Mode::Train), c.labels);
  ParamRegistry params = c.net.backward(xent.grad);

  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) analytic.emplace_back(p.grad.begin(), p.grad.end());
  std::vector<double> input_analytic(c.net.input_grad().data().begin(), c.net.input_grad().data().end());

  auto corrupt = [&](const std::string& name, std::vector<double>& grads) {
    if (opts.corrupt && name.find(*opts.corrupt) != std::string::npos) {
      for (double& g : grads) g += 1e-3 * (1.0 + std::abs(g));
    }
  };
  auto rel_err = [&](double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), opts.floor});
  };

  std::vector<GradcheckGroup> out;
  for (std::size_t g = 0; g < params.size(); ++g) {
    corrupt(params[g].name, analytic[g]);
    GradcheckGroup group{c.name, params[g].name, params[g].value.size(), 0.0};
    for (std::size_t i = 0; i < params[g].value.size(); ++i) {
      double& v = params[g].value[i];
      const double saved = v;
      v = saved + opts.step;
      const double plus = loss_at(c.input);
      v = saved - opts.step;
      const double minus = loss_at(c.input);
      v = saved;
      const double numeric = (plus - minus) / (2.0 * opts.step);
      group.max_rel_err = std::max(group.max_rel_err, rel_err(analytic[g][i], numeric));
    }
    out.push_back(group);
  }

  corrupt("input", input_analytic);
  GradcheckGroup input_group{c.name, "input", c.input.size(), 0.0};
  Tensord probe = c.input;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + opts.step;
    const double plus = loss_at(probe);
    probe[i] = saved - opts.step;
    const double minus = loss_at(probe);
    probe[i] = saved;
    input_group.max_rel_err =
        std::max(input_group.max_rel_err, rel_err(input_analytic[i], (plus - minus) / (2.0 * opts.step)));
  }
  out.push_back(input_group);
  return out;
}

std::vector<GradcheckCase> gradcheck_cases(const GradcheckOptions& opts) {
  std::vector<GradcheckCase> cases;
  const auto activations = selected_activations(opts);
  for (const auto& arch : selected_archs(opts.arch)) {
    for (const auto& act : activations) {
      Rng rng(opts.seed);
      cases.push_back(build_case(arch, act, rng));
    }
  }
  return cases;
}

bool GradcheckReport::passed() const {
  return std::all_of(groups.begin(), groups.end(), [&](const auto& g) { return g.max_rel_err <= tolerance; });
}

const GradcheckGroup* GradcheckReport::worst() const {
  const auto it = std::max_element(groups.begin(), groups.end(),
                                   [](const auto& x, const auto& y) { return x.max_rel_err < y.max_rel_err; });
  return it == groups.end() ? nullptr : &*it;
}

GradcheckReport run_gradcheck(const GradcheckOptions& opts) {
  GradcheckReport report;
  report.tolerance = opts.tolerance;
  for (auto& c : gradcheck_cases(opts)) {
    auto groups = gradcheck_network(c, opts);
    report.groups.insert(report.groups.end(), groups.begin(), groups.end());
  }
  return report;
}

int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& out, std::ostream& err) {
  GradcheckReport report;
  try {
    report = run_gradcheck(opts);
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  }
  std::string current;
  for (const auto& g : report.groups) {
    if (g.case_name != current) {
      current = g.case_name;
      fmt::print(out, "{}\n", current);
    }
    fmt::print(out, "  {:<28} n={:<4} max_rel_err={:.3e} {}\n", g.group, g.count, g.max_rel_err,
               g.max_rel_err <= report.tolerance ? "ok" : "FAIL");
  }
  if (report.passed()) {
    fmt::print(out, "gradcheck passed: {} groups, worst {:.3e} <= {:.1e}\n", report.groups.size(),
               report.worst() ? report.worst()->max_rel_err : 0.0, report.tolerance);
    return kExitOk;
  }
  for (const auto& g : report.groups) {
    if (g.max_rel_err > report.tolerance) {
      fmt::print(err, "gradcheck FAILED: {} {} max_rel_err={:.3e} > {:.1e}\n", g.case_name, g.group, g.max_rel_err,
                 report.tolerance);
    }
  }
  return kExitNumerical;
}

}  // namespace pelu
