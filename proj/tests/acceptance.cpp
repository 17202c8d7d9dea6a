// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "pelu/activations.hpp"
#include "pelu/analysis.hpp"
#include "pelu/data.hpp"
#include "pelu/optim.hpp"
#include "pelu/run.hpp"

using namespace pelu;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

RunConfig blobs_run(ActivationKind act, std::uint64_t seed, const fs::path& out) {
  RunConfig cfg;
  cfg.architecture.widths = {2, 64, 64, 3};
  cfg.activation = act;
  cfg.param_config = ParamConfig::A_INVB;
  cfg.optimizer.learning_rate = 0.01;
  cfg.optimizer.momentum = 0.9;
  cfg.optimizer.weight_decay = 5e-4;
  cfg.epochs = 200;
  cfg.batch_size = 32;
  cfg.seed = seed;
  cfg.dataset.n_per_class = 667;  // 2001 points
  cfg.dataset.test_n_per_class = 200;
  cfg.dataset.num_classes = 3;
  cfg.dataset.dim = 2;
  cfg.dataset.spread = 0.5;
  cfg.output_dir = out;
  return cfg;
}

Verdict interval_optimum() {
  const auto start = Clock::now();
  AnalyzeOptions opts;
  opts.a = opts.b = 1.0;
  opts.w_max = 10.0;
  opts.grid = 100000;
  opts.output_dir = "acceptance_out/analyze";
  std::ostringstream sink;
  const int code = cmd_analyze(opts, sink, sink);
  const auto unit = analyze(opts);
  bool ok = code == kExitOk && fs::exists(opts.output_dir / "analysis.csv");
  ok = ok && std::abs(unit.closed_form.w_star - 2.71828) <= 1e-4 && std::abs(unit.closed_form.l_star - 0.36788) <= 1e-4;
  ok = ok && std::abs(unit.brute_force.w_best - unit.closed_form.w_star) <= 1e-4;
  ok = ok && std::abs(unit.brute_force.l_best - unit.closed_form.l_star) <= 1e-4;

  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double a = rng.uniform(0.1, 5.0), b = rng.uniform(0.1, 5.0);
    const auto opt = optimal_weight(a, b);
    const auto bf = brute_force_optimum(a, b, default_w_max(a, b), std::size_t(100000));
    const double gap = std::abs(bf.w_best - opt.w_star) / bf.resolution;
    worst = std::max(worst, gap);
    ok = ok && gap <= 1.0;
  }
  const double elapsed = seconds_since(start);
  ok = ok && elapsed < 10.0;
  return {ok, fmt::format("w*={:.6f} l*={:.6f} grid w={:.6f}; 20 random (a,b) worst |w_grid-w*|={:.2f} grid steps; {:.2f}s",
                          unit.closed_form.w_star, unit.closed_form.l_star, unit.brute_force.w_best, worst, elapsed)};
}

Verdict gradient_fidelity() {
  GradcheckOptions opts;  // every arch, activation and configuration; step 1e-6
  const auto report = run_gradcheck(opts);
  const auto* worst = report.worst();
  const bool ok = report.passed() && opts.tolerance <= 1e-6 && opts.step == 1e-6 && worst;
  return {ok, fmt::format("{} parameter groups, worst {:.3e} ({} {})", report.groups.size(),
                          worst ? worst->max_rel_err : 0.0, worst ? worst->case_name : "-", worst ? worst->group : "-")};
}

Verdict elu_recovery() {
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double h = -10.0 + 20.0 * i / 9999.0;
    const double elu = h >= 0.0 ? h : std::exp(h) - 1.0;
    worst = std::max(worst, std::abs(pelu::pelu(h, 1.0, 1.0) - elu));
  }
  return {worst <= 1e-12, fmt::format("max |PELU(1,1) - ELU| = {:.3e} over 10^4 points", worst)};
}

Verdict differentiability_at_zero() {
  Rng rng(4);
  const double step = 1e-10;
  double worst_gap = 0.0, worst_slope = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(0.1, 10.0), b = rng.uniform(0.1, 10.0);
    const double right = (pelu::pelu(step, a, b) - pelu::pelu(0.0, a, b)) / step;
    const double left = (pelu::pelu(0.0, a, b) - pelu::pelu(-step, a, b)) / step;
    worst_gap = std::max(worst_gap, std::abs(right - left));
    worst_slope = std::max({worst_slope, std::abs(right - a / b), std::abs(left - a / b)});
  }
  return {worst_gap <= 1e-6 && worst_slope <= 1e-6,
          fmt::format("max |right - left| = {:.3e}, max |one-sided - a/b| = {:.3e}", worst_gap, worst_slope)};
}

Verdict constraint_safety() {
  Rng rng(5);
  SgdConfig cfg;
  double value = 1.0, velocity = 0.0, lowest = value;
  for (int i = 0; i < 10000; ++i) {
    if (i % 1000 == 0) {
      cfg.learning_rate = rng.uniform(1e-3, 1.0);
      cfg.momentum = rng.uniform(0.0, 0.99);
      cfg.weight_decay = rng.uniform(0.0, 0.01);
    }
    const auto next = step_constrained(value, rng.normal(0.0, 10.0), velocity, cfg);
    value = next.value;
    velocity = next.velocity;
    lowest = std::min(lowest, value);
  }
  return {lowest >= kParamFloor, fmt::format("10^4 fuzzed steps, minimum stored value {}", lowest)};
}

Verdict chain_formula() {
  Rng rng(6);
  double worst = 0.0;
  std::size_t checks = 0;
  for (int n = 0; n < 100; ++n) {
    ChainNet<double> net;
    net.weights.resize(1 + rng.below(20));
    for (double& w : net.weights) w = rng.uniform(-2.0, 2.0);
    net.a = rng.uniform(0.1, 3.0);
    net.b = rng.uniform(0.1, 3.0);
    double x = rng.uniform(-2.0, 2.0);
    if (x == 0.0) x = 1.0;
    const double y = rng.uniform(-2.0, 2.0);
    const auto backprop = chain_gradients(net, x, y);
    for (std::size_t k = 1; k <= net.depth(); ++k) {
      const double formula = chain_gradient_formula(net, x, y, k);
      const double scale = std::abs(backprop[k]);
      if (scale == 0.0 && formula == 0.0) continue;
      worst = std::max(worst, std::abs(formula - backprop[k]) / std::max(scale, std::abs(formula)));
      ++checks;
    }
  }
  return {worst <= 1e-10, fmt::format("{} layer gradients, worst relative error {:.3e}", checks, worst)};
}

// Criterion 7 writes the run that criterion 8 inspects.
const fs::path kTrainDir = "acceptance_out/train";

Verdict desk_scale_training() {
  const auto start = Clock::now();
  const auto result = train(blobs_run(ActivationKind::pelu(), 7, kTrainDir));
  const double elapsed = seconds_since(start);
  fs::create_directories(kTrainDir);
  write_metrics_csv(kTrainDir / "metrics.csv", result.epochs);
  write_progression_csv(kTrainDir / "progression.csv", result.progression);
  const double accuracy = 100.0 - result.final_train_err_pct;

  int pelu_wins = 0;
  std::string losses;
  for (std::uint64_t seed = 7; seed < 12; ++seed) {
    const double p = seed == 7 ? result.final_train_loss
                               : train(blobs_run(ActivationKind::pelu(), seed, "acceptance_out/unused")).final_train_loss;
    const double e = train(blobs_run(ActivationKind::elu(), seed, "acceptance_out/unused")).final_train_loss;
    pelu_wins += p <= e;
    losses += fmt::format(" {:.2e}/{:.2e}", p, e);
  }
  const bool ok = accuracy >= 95.0 && elapsed < 60.0 && pelu_wins >= 3;
  return {ok, fmt::format("train accuracy {:.2f}% in {:.1f}s; PELU loss <= ELU in {}/5 seeds (pelu/elu:{})", accuracy,
                          elapsed, pelu_wins, losses)};
}

Verdict progression_instrumentation() {
  std::ifstream in(kTrainDir / "progression.csv");
  if (!in) return {false, "progression.csv missing"};
  std::string line;
  std::getline(in, line);
  if (line != "iteration,layer_index,a_eff,b_eff,slope,neg_saturation,train_loss") return {false, "unexpected header"};
  std::size_t rows = 0;
  double best_a = 0.0, best_b = 0.0;
  bool found = false;
  while (std::getline(in, line)) {
    std::vector<double> fields;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) fields.push_back(std::stod(cell));
    if (fields.size() != 7) return {false, fmt::format("row {} has {} fields", rows + 1, fields.size())};
    ++rows;
    const double da = std::abs(fields[2] - 1.0), db = std::abs(fields[3] - 1.0);
    if (da > 0.01 && db > 0.01) {
      found = true;
      if (da + db > best_a + best_b) {
        best_a = da;
        best_b = db;
      }
    }
  }
  return {found && rows > 0,
          fmt::format("{} rows; largest departure |a-1|={:.4f} |b-1|={:.4f}", rows, best_a, best_b)};
}

Verdict sweep_integrity() {
  SweepConfig sweep;
  sweep.base = blobs_run(ActivationKind::pelu(), 7, "");
  sweep.base.epochs = 1;
  sweep.base.optimizer.weight_decay = 0.0;
  for (ParamConfig c : {ParamConfig::A_B, ParamConfig::A_INVB, ParamConfig::INVA_B, ParamConfig::INVA_INVB}) {
    sweep.variants.push_back({"pelu(" + std::string(to_string(c)) + ")", ActivationKind::pelu(), c});
  }
  sweep.output_dir = "acceptance_out/sweep";
  const auto result = run_sweep(sweep);
  fs::create_directories(sweep.output_dir);
  write_sweep_csv(sweep.output_dir / "sweep.csv", result.rows);
  double lo = result.runs.at(0).first_loss, hi = lo;
  for (const auto& run : result.runs) {
    lo = std::min(lo, run.first_loss);
    hi = std::max(hi, run.first_loss);
  }
  const bool ok = result.rows.size() == 4 && result.runs.size() == 4 && hi - lo <= 1e-10;
  return {ok, fmt::format("{} variants completed; first-loss spread {:.3e} (loss {:.12f})", result.rows.size(), hi - lo, lo)};
}

Verdict idx_round_trip() {
  const fs::path dir = "acceptance_out/idx";
  fs::create_directories(dir);
  Rng rng(10);
  IdxArray images{{12, 7, 5}, {}}, labels{{12}, {}};
  for (std::size_t i = 0; i < 12 * 7 * 5; ++i) images.bytes.push_back(std::uint8_t(rng.below(256)));
  for (std::size_t i = 0; i < 12; ++i) labels.bytes.push_back(std::uint8_t(rng.below(10)));
  write_idx(dir / "images.idx", images);
  write_idx(dir / "labels.idx", labels);
  const auto ds = load_idx(dir / "images.idx", dir / "labels.idx");
  bool exact = ds.inputs.shape() == Shape{12, 1, 7, 5};
  for (std::size_t i = 0; exact && i < images.bytes.size(); ++i) exact = ds.inputs[i] == images.bytes[i] / 255.0;
  for (std::size_t i = 0; exact && i < 12; ++i) exact = ds.labels[i] == labels.bytes[i];
  const auto back = read_idx(dir / "images.idx");
  exact = exact && back.dims == images.dims && back.bytes == images.bytes;

  std::vector<char> raw;
  {
    std::ifstream in(dir / "images.idx", std::ios::binary);
    raw.assign(std::istreambuf_iterator<char>(in), {});
  }
  raw[0] = raw[1] = raw[2] = raw[3] = 0;
  std::ofstream(dir / "corrupt.idx", std::ios::binary).write(raw.data(), std::streamsize(raw.size()));
  bool rejected = false;
  try {
    load_idx(dir / "corrupt.idx", dir / "labels.idx");
  } catch (const FormatError&) {
    rejected = true;
  }
  return {exact && rejected, fmt::format("round trip {}; corrupted magic {}", exact ? "bit-exact" : "MISMATCH",
                                         rejected ? "rejected" : "ACCEPTED")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"interval-length optimum", interval_optimum},
      {"gradient fidelity", gradient_fidelity},
      {"ELU recovery", elu_recovery},
      {"differentiability at zero", differentiability_at_zero},
      {"constraint safety", constraint_safety},
      {"chain-formula equivalence", chain_formula},
      {"desk-scale training", desk_scale_training},
      {"progression instrumentation", progression_instrumentation},
      {"configuration sweep integrity", sweep_integrity},
      {"IDX round trip", idx_round_trip},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << fmt::format("{} criterion {:>2}: {} - {}\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                             v.detail)
              << std::flush;
  }
  std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
