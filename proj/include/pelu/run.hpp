#ifndef PELU_RUN_HPP
#define PELU_RUN_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pelu/activations.hpp"
#include "pelu/analysis.hpp"
#include "pelu/data.hpp"
#include "pelu/layers.hpp"
#include "pelu/optim.hpp"

namespace pelu {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

// ---------------------------------------------------------------------------
// Run configuration (JSON). Unknown keys are rejected; every error message
// starts with the JSON path of the offending field, e.g.
// "config.optimizer.momentum: expected a number in [0, 1)".

enum class ArchitectureType { Mlp, SmallNetLite };

struct ArchitectureConfig {
  ArchitectureType type = ArchitectureType::Mlp;
  std::vector<std::size_t> widths{2, 64, 64, 3};  // mlp
  bool batchnorm = false;                           // mlp
  SmallNetSpec smallnet;                            // smallnet-lite (input dims come from the dataset)
};

struct ScheduleEntry {
  std::size_t epoch;
  double learning_rate;
  double weight_decay;
};

enum class DatasetType { Blobs, Idx };

struct DatasetConfig {
  DatasetType type = DatasetType::Blobs;
  // blobs
  std::size_t n_per_class = 100;
  std::size_t test_n_per_class = 100;
  std::size_t num_classes = 3;
  std::size_t dim = 2;
  double spread = 0.5;
  // idx
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  bool mean_subtraction = true;
  Augment augment = Augment::None;
};

struct RunConfig {
  ArchitectureConfig architecture;
  ActivationKind activation = ActivationKind::pelu();
  ParamConfig param_config = kDefaultParamConfig;
  SgdConfig optimizer;
  std::vector<ScheduleEntry> schedule;  // empty: optimizer constants for every epoch
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  std::size_t log_every = 50;
  std::filesystem::path output_dir = "out";

  /// Learning rate and weight decay in effect during `epoch` (1-based).
  std::pair<double, double> regime(std::size_t epoch) const;
};

RunConfig parse_run_config(const nlohmann::json& j, const std::string& path = "config");
RunConfig load_run_config(const std::filesystem::path& file);
nlohmann::json to_json(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Training

struct EpochMetrics {
  std::size_t epoch;
  double train_loss;     // mean minibatch loss over the epoch
  double train_err_pct;  // eval-mode error on the training split
  double test_err_pct;   // eval-mode error on the test split (NaN without one)
  double lr;
  double wd;
};

/// PELU parameter snapshot for one activation layer.
struct ProgressionRecord {
  std::size_t iteration;
  std::size_t layer_index;  // position among the network's PELU layers
  double a_eff;
  double b_eff;
  double slope;           // a / b
  double neg_saturation;  // a
  double train_loss;      // loss of the minibatch just trained on
};

struct RunResult {
  std::vector<EpochMetrics> epochs;
  std::vector<ProgressionRecord> progression;
  std::optional<double> first_loss;  // forward loss of the very first minibatch
  double final_train_err_pct = 0.0;
  double final_test_err_pct = 0.0;
  double final_train_loss = 0.0;
  Network net;
};

struct Datasets {
  Dataset train;
  std::optional<Dataset> test;
};

Datasets load_datasets(const RunConfig& cfg);
Network build_network(const RunConfig& cfg, const Dataset& train, Rng& rng);

/// Deterministic training run; throws NumericalError on a non-finite loss.
RunResult train(const RunConfig& cfg, std::ostream* log = nullptr);

/// Eval-mode (error %, mean loss) over a dataset.
std::pair<double, double> evaluate(Network& net, const Dataset& ds, std::size_t chunk = 256);

void write_metrics_csv(const std::filesystem::path& file, const std::vector<EpochMetrics>& rows);
void write_progression_csv(const std::filesystem::path& file, const std::vector<ProgressionRecord>& rows);
void write_model(const std::filesystem::path& file, const RunConfig& cfg, Network& net);

int cmd_train(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err,
              const std::optional<std::filesystem::path>& output_dir = std::nullopt);

// ---------------------------------------------------------------------------
// Gradient checking

struct GradcheckOptions {
  std::string arch = "all";          // mlp:2,8,3 | mlp-bn:2,8,3 | conv | conv-bn-drop | smallnet-lite | all
  std::string activation = "all";    // pelu | elu | relu | lrelu | prelu | all
  std::string param_config = "all";  // PELU configuration or all
  std::uint64_t seed = 0;
  double step = 1e-6;
  double tolerance = 1e-6;
  /// Relative-error denominator is max(|analytic|, |numeric|, floor).
  double floor = 1e-3;
  /// Test hook: perturb analytic gradients of groups whose name contains this.
  std::optional<std::string> corrupt;
};

struct GradcheckGroup {
  std::string case_name;  // arch/activation/config
  std::string group;      // parameter group, e.g. layer0.linear.weight, or "input"
  std::size_t count = 0;
  double max_rel_err = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckGroup> groups;
  double tolerance = 0.0;

  bool passed() const;
  const GradcheckGroup* worst() const;
};

struct GradcheckCase {
  std::string name;
  Network net;
  Tensord input;
  std::vector<std::size_t> labels;
};

/// Compares every registered parameter gradient (and the input gradient)
/// against central finite differences of the mean cross-entropy.
std::vector<GradcheckGroup> gradcheck_network(GradcheckCase& c, const GradcheckOptions& opts);

/// Builds the cases selected by the options, with randomized PELU/PReLU/BN
/// parameters so every gradient term is exercised.
std::vector<GradcheckCase> gradcheck_cases(const GradcheckOptions& opts);

GradcheckReport run_gradcheck(const GradcheckOptions& opts);
int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// Interval-length analysis

struct AnalyzeOptions {
  double a = 1.0;
  double b = 1.0;
  std::optional<double> w_max;  // default 10 e b / a
  std::size_t grid = 100000;
  std::filesystem::path output_dir = ".";
};

struct AnalyzeResult {
  WeightOptimum<double> closed_form;
  BruteForceOptimum<double> brute_force;
};

AnalyzeResult analyze(const AnalyzeOptions& opts);
int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// Sweeps over activations / parameter configurations

struct SweepVariant {
  std::string name;
  ActivationKind activation;
  ParamConfig param_config;
};

struct SweepConfig {
  RunConfig base;
  std::vector<SweepVariant> variants;
  std::size_t seeds = 1;  // runs use base.seed, base.seed + 1, ...
  std::filesystem::path output_dir = "sweep";
};

SweepConfig parse_sweep_config(const nlohmann::json& j);
SweepConfig load_sweep_config(const std::filesystem::path& file);

struct SweepRun {
  std::string variant;
  std::uint64_t seed;
  double first_loss;
  double final_train_loss;
  double final_train_err_pct;
  double final_test_err_pct;
};

struct SweepRow {
  std::string variant;
  std::size_t n_seeds;
  double test_err_mean, test_err_std;
  double train_loss_mean, train_loss_std;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepRun> runs;
};

SweepResult run_sweep(const SweepConfig& cfg, std::ostream* log = nullptr);
void write_sweep_csv(const std::filesystem::path& file, const std::vector<SweepRow>& rows);
void write_sweep_runs_csv(const std::filesystem::path& file, const std::vector<SweepRun>& runs);
int cmd_sweep(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err,
              const std::optional<std::filesystem::path>& output_dir = std::nullopt);

}  // namespace pelu

#endif  // PELU_RUN_HPP
