#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "csv.hpp"
#include "pelu/run.hpp"

namespace pelu {

AnalyzeResult analyze(const AnalyzeOptions& opts) {
  if (!(opts.a > 0.0) || !(opts.b > 0.0)) {
    throw std::invalid_argument(fmt::format("--a and --b must be positive (got a={}, b={})", opts.a, opts.b));
  }
  const double w_max = opts.w_max.value_or(default_w_max(opts.a, opts.b));
  if (!(w_max > opts.b / opts.a) || opts.grid < 3) {
    throw std::invalid_argument(
        fmt::format("invalid grid: need --wmax > b/a = {} and --grid >= 3 (got wmax={}, grid={})", opts.b / opts.a,
                    w_max, opts.grid));
  }
  return {optimal_weight(opts.a, opts.b), brute_force_optimum(opts.a, opts.b, w_max, opts.grid)};
}

int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err) {
  AnalyzeResult result;
  try {
    result = analyze(opts);
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  }
  try {
    std::filesystem::create_directories(opts.output_dir);
    {
      csv::Writer grid(opts.output_dir / "analysis.csv", {"a", "b", "w", "interval_length"});
      for (std::size_t i = 0; i < result.brute_force.w.size(); ++i) {
        grid.row(opts.a, opts.b, result.brute_force.w[i], result.brute_force.length[i]);
      }
    }
    csv::Writer summary(opts.output_dir / "analysis_summary.csv",
                        {"w_star", "l_star", "w_star_bruteforce", "l_star_bruteforce"});
    summary.row(result.closed_form.w_star, result.closed_form.l_star, result.brute_force.w_best,
                result.brute_force.l_best);
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  }
  fmt::print(out, "w_star,l_star,w_star_bruteforce,l_star_bruteforce\n{},{},{},{}\n", result.closed_form.w_star,
             result.closed_form.l_star, result.brute_force.w_best, result.brute_force.l_best);
  fmt::print(out, "# grid resolution {:.3e}, max |closed form - bisection| {:.3e}\n", result.brute_force.resolution,
             result.brute_force.max_root_discrepancy);
  return kExitOk;
}

}  // namespace pelu
