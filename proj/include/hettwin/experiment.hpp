#pragma once

#include "hettwin/orchestration/orchestration.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hettwin {

/// One sweep: scenario x variants x seeds x user counts, each point running a
/// full warm-up + orchestration round into its own output subdirectory.
struct ExperimentPlan {
  std::string scenario_path;
  std::vector<Variant> variants = {Variant::kHierarchical};
  std::vector<std::uint64_t> seeds = {1};
  std::vector<int> user_sweep;  // empty: keep the scenario's own user count
  std::string out_dir = "out";
  int workers = 1;
  bool emit_round_json = true;
  bool emit_figure_data = true;
};

struct ResultRow {
  std::string variant;
  int scale = 0;
  std::uint64_t seed = 0;
  double efficiency = 0.0;
  double mean_satisfaction = 0.0;
  double mean_model_mse = 0.0;
};

struct ResultTable {
  int schema_version = 1;
  std::vector<ResultRow> rows;
};

/// Runs every sweep point (bounded worker pool), writes results.csv, per-round
/// JSON reports, and plot-ready figure CSVs. Rows come back sorted by
/// (variant, scale, seed) so repeated runs serialize identically.
ResultTable run_experiment(const ExperimentPlan& plan, const Config& scenario_cfg);

/// One point: build, warm up, run one round. Exposed for tests.
RoundReport run_point(const Config& scenario_cfg, Variant variant, std::uint64_t seed,
                      int users_override = 0);

void write_results_csv(const ResultTable& table, const std::string& path);
ResultTable read_results_csv(const std::string& path);

// ---------------------------------------------------------------------------
// figure-style data products

/// Trend/seasonal/residual traces of the six attributes of one user.
void write_decomposition_csv(const Simulator& sim, int user,
                             const std::vector<int>& periods, const std::string& path);

/// Held-out forecast MSE of ARIMA / NARX / STL-NARX on synthetic versions of
/// four attributes (three with a daily pattern, one exogenous-driven load).
struct MethodComparisonRow {
  std::string attribute;
  std::string method;
  double mse = 0.0;
};
std::vector<MethodComparisonRow> method_comparison(std::uint64_t seed,
                                                   int train_hours = 600,
                                                   int test_hours = 48);
void write_method_comparison_csv(const std::vector<MethodComparisonRow>& rows,
                                 const std::string& path);

/// Parses "1..5" or "1,4,9" style lists.
std::vector<std::uint64_t> parse_seed_spec(const std::string& spec);

}  // namespace hettwin
