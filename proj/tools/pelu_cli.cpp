// Command-line front end: train, gradcheck, analyze, sweep.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pelu/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"PELU training and analysis toolkit"};
  app.require_subcommand(1);

  std::string train_config;
  std::optional<std::string> train_out;
  auto* train = app.add_subcommand("train", "Train a network from a JSON run config");
  train->add_option("config", train_config, "Run config (JSON)")->required();
  train->add_option("--out", train_out, "Output directory (overrides output_dir)");

  pelu::GradcheckOptions grad;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  gradcheck->add_option("--arch", grad.arch, "mlp:W0,W1,... | mlp-bn:... | conv | conv-bn-drop | smallnet-lite | all")
      ->capture_default_str();
  gradcheck->add_option("--act", grad.activation, "pelu | elu | relu | lrelu | prelu | all")->capture_default_str();
  gradcheck->add_option("--param-config", grad.param_config, "a_b | a_invb | inva_b | inva_invb | all")
      ->capture_default_str();
  gradcheck->add_option("--seed", grad.seed, "Random seed")->capture_default_str();
  gradcheck->add_option("--tolerance", grad.tolerance, "Maximum relative error")->capture_default_str();
  gradcheck->add_option("--corrupt", grad.corrupt, "Test hook: corrupt gradients of groups matching this name");

  pelu::AnalyzeOptions analyze;
  std::optional<double> wmax;
  std::string analyze_out = ".";
  auto* analyze_cmd = app.add_subcommand("analyze", "Interval-length analysis of the amplification factor");
  analyze_cmd->add_option("--a", analyze.a, "PELU parameter a")->required();
  analyze_cmd->add_option("--b", analyze.b, "PELU parameter b")->required();
  analyze_cmd->add_option("--wmax", wmax, "Upper end of the weight grid (default 10 e b/a)");
  analyze_cmd->add_option("--grid", analyze.grid, "Number of grid points")->capture_default_str();
  analyze_cmd->add_option("--out", analyze_out, "Output directory")->capture_default_str();

  std::string sweep_config;
  std::optional<std::string> sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Compare activations/parameter configurations over seeds");
  sweep->add_option("config", sweep_config, "Sweep config (JSON)")->required();
  sweep->add_option("--out", sweep_out, "Output directory (overrides output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? pelu::kExitOk : pelu::kExitUsage;
  }

  if (*train) {
    std::optional<std::filesystem::path> out;
    if (train_out) out = *train_out;
    return pelu::cmd_train(train_config, std::cout, std::cerr, out);
  }
  if (*gradcheck) return pelu::cmd_gradcheck(grad, std::cout, std::cerr);
  if (*analyze_cmd) {
    analyze.w_max = wmax;
    analyze.output_dir = analyze_out;
    return pelu::cmd_analyze(analyze, std::cout, std::cerr);
  }
  std::optional<std::filesystem::path> out;
  if (sweep_out) out = *sweep_out;
  return pelu::cmd_sweep(sweep_config, std::cout, std::cerr, out);
}
