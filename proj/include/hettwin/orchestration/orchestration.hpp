#pragma once

#include "hettwin/graphseg/graphseg.hpp"
#include "hettwin/hetnet/simulator.hpp"
#include "hettwin/hetnet/trace.hpp"
#include "hettwin/twin/forecast.hpp"
#include "hettwin/valuation/valuation.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace hettwin {

// ---------------------------------------------------------------------------
// twin registry and delay compensation

/// Fitted twins keyed by (entity, attribute), with the build instant t_m and
/// each model's last-data instant for delay compensation.
class TwinRegistry {
 public:
  void add(const std::string& entity, const std::string& attribute, ForecastModel model);
  const ForecastModel* find(const std::string& entity, const std::string& attribute) const;
  const ForecastModel& require(const std::string& entity,
                               const std::string& attribute) const;

  double build_instant_h() const { return t_build_h_; }
  void set_build_instant(double t_m_h);

  size_t size() const { return models_.size(); }
  double mean_fit_mse() const;

  const std::map<std::pair<std::string, std::string>, ForecastModel>& models() const {
    return models_;
  }

  nlohmann::json to_json() const;
  static TwinRegistry from_json(const nlohmann::json& j);

 private:
  std::map<std::pair<std::string, std::string>, ForecastModel> models_;
  double t_build_h_ = 0.0;
};

/// Per-model forecast horizons lambda = t_u - t_last (hours). Throws when any
/// model's data reaches past t_u.
std::map<std::pair<std::string, std::string>, int> vpd_compensate(
    const TwinRegistry& registry, double t_u_h);

// ---------------------------------------------------------------------------
// award prediction

/// What the award chain consumes at the decision instant. The production
/// implementation answers from twins and geometry; test oracles answer from
/// the simulated future.
class AwardInputs {
 public:
  virtual ~AwardInputs() = default;
  virtual double gain(int user, int bs) const = 0;       // linear power gain
  virtual double demand_bps(int user) const = 0;
  virtual double interferer_tx_w(int bs) const = 0;      // co-channel tx estimate
};

struct AwardConfig {
  int power_levels = 5;
  double min_power_frac = 0.1;     // grid spans linearly to 100% of P_max
  double satisfaction_cap = 2.0;   // ceiling on each predicted S
};

/// Predicted award matrix over (area users) x (area BSs); entries outside the
/// potential-link mask hold -inf and can never be assigned.
struct AwardMatrix {
  std::vector<int> users;  // global ids per row
  std::vector<int> bss;    // global ids per column
  Matrix award;
  Matrix power_w;  // power achieving the award
};

/// Weighted satisfaction award sum with the per-metric ceiling applied.
double award_from_satisfaction(const Vector& satisfaction, const Vector& weights,
                               double cap);

/// Evaluates the forecast chain SINR -> rate -> QoS -> capped award for every
/// in-range pair and candidate power level, keeping the best level per pair.
AwardMatrix predict_awards(const AwardInputs& inputs, const std::vector<int>& users,
                           const std::vector<int>& bss, const Scenario& scenario,
                           const Eigen::MatrixXi& potential, const AwardConfig& cfg);

// ---------------------------------------------------------------------------
// assignment

struct AssignmentPair {
  int user = -1;
  int bs = -1;
  double predicted_award = 0.0;
  double power_w = 0.0;
};

struct AssignmentSolution {
  std::vector<AssignmentPair> pairs;  // virtual pairings already stripped
  double total_predicted = 0.0;
};

/// Pads the rectangular award matrix square with zero-award virtual entities,
/// replaces -inf sentinels with a value below every real alternative, runs
/// the Hungarian maximization, and strips virtual or sentinel pairings.
AssignmentSolution balance_and_assign(const AwardMatrix& awards);

// ---------------------------------------------------------------------------
// cost accounting

struct CostParams {
  double samples_per_window = 168.0;
  double bytes_per_sample = 8.0;
  double transport_weight = 1.0;
  // indexed by level 1..4; L1 cheapest to model finely, L4 dearest
  std::array<double, 5> level_multiplier = {0.0, 1.0, 2.0, 4.0, 8.0};
  double hdt_samples = 24.0;       // coarse twins ingest aggregated data
  double hdt_transport = 0.1;
};

double ldt_attribute_cost(int level, const CostParams& p);
double hdt_attribute_cost(const CostParams& p);

struct CostLedger {
  double hdt_cost = 0.0;
  std::vector<double> area_costs;  // Theta per target area
  double ldt_total() const;
  double total() const { return hdt_cost + ldt_total(); }
};

/// E_Q: realized assignment award over total modeling cost.
double efficiency(double realized_award_total, const CostLedger& ledger);

// ---------------------------------------------------------------------------
// the round pipeline

enum class Variant { kHierarchical, kHierarchicalNoSync, kAllInclusive };
const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct PipelineConfig {
  Variant variant = Variant::kHierarchical;
  ValuationConfig valuation;
  StlConfig stl;
  NarxConfig narx;
  AwardConfig award;
  TargetAreaConfig area;
  CostParams cost;
  double update_weight = 0.3;  // adjacency situation-update blend
  int segments = 0;          // 0 -> eigengap heuristic
  int max_segments = 6;
  int ar_lag = 2;
  int train_window_h = 336;  // history fed to valuation and twins
  int decision_lead_h = 1;   // t_u = now + lead
  int max_exogenous = 2;
  std::string exo_mode = "granger";  // or "none"
  std::uint64_t seed = 1;

  static PipelineConfig from_config(const Config& cfg, Variant variant,
                                    std::uint64_t seed);
};

struct RoundReport {
  Variant variant = Variant::kHierarchical;
  int t_now = 0;
  int t_u = 0;
  double efficiency_q = 0.0;
  double realized_total = 0.0;
  double predicted_total = 0.0;
  double hdt_cost = 0.0;
  double ldt_cost = 0.0;
  double mean_satisfaction_before = 0.0;
  double mean_satisfaction_after = 0.0;
  double mean_model_mse = 0.0;
  int num_segments = 0;
  int num_areas = 0;
  int twins_fitted = 0;
  bool constraints_ok = true;
  std::vector<AssignmentPair> assignments;
  std::vector<double> user_award_before;  // per assigned user
  std::vector<double> user_award_after;
  Vector satisfaction_before_min;  // per user, min over metrics
  Vector satisfaction_after_min;
  Vector bs_load_after;
  std::vector<std::string> diagnostics;

  nlohmann::json to_json() const;
};

/// Executes one orchestration round on a warmed-up simulator: valuation ->
/// segmentation -> target areas -> integration/twin fitting -> delay
/// compensation -> award prediction -> balanced assignment -> policy applied
/// and measured at t_u. The all-inclusive variant skips selection and models
/// everything; the no-sync variant skips clock compensation and queries every
/// twin at horizon zero.
RoundReport run_round(Simulator& sim, const TraceBundle& trace,
                      const PipelineConfig& cfg);

}  // namespace hettwin
