#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "csv.hpp"
#include "pelu/run.hpp"

namespace pelu {

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= double(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / double(xs.size() - 1))};
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg, std::ostream* log) {
  SweepResult result;
  for (const auto& variant : cfg.variants) {
    std::vector<double> test_errs, train_losses;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      RunConfig run = cfg.base;
      run.activation = variant.activation;
      run.param_config = variant.param_config;
      run.seed = cfg.base.seed + s;
      const RunResult r = train(run);
      result.runs.push_back({variant.name, run.seed, r.first_loss.value_or(std::nan("")), r.final_train_loss,
                             r.final_train_err_pct, r.final_test_err_pct});
      test_errs.push_back(r.final_test_err_pct);
      train_losses.push_back(r.final_train_loss);
      if (log) {
        fmt::print(*log, "{:<18} seed {:<4} train loss {:.6f}  test err {:.2f}%\n", variant.name, run.seed,
                   r.final_train_loss, r.final_test_err_pct);
      }
    }
    const auto [te_mean, te_std] = mean_std(test_errs);
    const auto [tl_mean, tl_std] = mean_std(train_losses);
    result.rows.push_back({variant.name, cfg.seeds, te_mean, te_std, tl_mean, tl_std});
  }
  return result;
}

void write_sweep_csv(const std::filesystem::path& file, const std::vector<SweepRow>& rows) {
  csv::Writer w(file, {"variant", "n_seeds", "test_err_mean", "test_err_std", "train_loss_mean", "train_loss_std"});
  for (const auto& r : rows) {
    w.row(std::string_view(r.variant), r.n_seeds, r.test_err_mean, r.test_err_std, r.train_loss_mean, r.train_loss_std);
  }
}

void write_sweep_runs_csv(const std::filesystem::path& file, const std::vector<SweepRun>& runs) {
  csv::Writer w(file, {"variant", "seed", "first_loss", "final_train_loss", "final_train_err_pct", "final_test_err_pct"});
  for (const auto& r : runs) {
    w.row(std::string_view(r.variant), r.seed, r.first_loss, r.final_train_loss, r.final_train_err_pct,
          r.final_test_err_pct);
  }
}

int cmd_sweep(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err,
              const std::optional<std::filesystem::path>& output_dir) {
  try {
    SweepConfig cfg = load_sweep_config(config_path);
    if (output_dir) cfg.output_dir = *output_dir;
    std::filesystem::create_directories(cfg.output_dir);
    const SweepResult result = run_sweep(cfg, &out);
    write_sweep_csv(cfg.output_dir / "sweep.csv", result.rows);
    write_sweep_runs_csv(cfg.output_dir / "sweep_runs.csv", result.runs);
    for (const auto& r : result.rows) {
      fmt::print(out, "{:<18} test err {:.2f} +- {:.2f}%  train loss {:.6f} +- {:.6f}\n", r.variant, r.test_err_mean,
                 r.test_err_std, r.train_loss_mean, r.train_loss_std);
    }
    return kExitOk;
  } catch (const NumericalError& e) {
    fmt::print(err, "numerical failure: {}\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  }
}

}  // namespace pelu
