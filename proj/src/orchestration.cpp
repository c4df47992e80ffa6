#include "hettwin/orchestration/orchestration.hpp"

#include "hettwin/integration/clock.hpp"
#include "hettwin/integration/gpr.hpp"
#include "hettwin/orchestration/hungarian.hpp"
#include "hettwin/valuation/stats.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace hettwin {

using nlohmann::json;

// ---------------------------------------------------------------------------
// registry

void TwinRegistry::add(const std::string& entity, const std::string& attribute,
                       ForecastModel model) {
  models_.insert_or_assign({entity, attribute}, std::move(model));
}

const ForecastModel* TwinRegistry::find(const std::string& entity,
                                        const std::string& attribute) const {
  auto it = models_.find({entity, attribute});
  return it == models_.end() ? nullptr : &it->second;
}

const ForecastModel& TwinRegistry::require(const std::string& entity,
                                           const std::string& attribute) const {
  const ForecastModel* m = find(entity, attribute);
  if (!m)
    throw std::runtime_error("missing twin for attribute " + attribute + " of " +
                             entity);
  return *m;
}

void TwinRegistry::set_build_instant(double t_m_h) {
  for (const auto& [key, model] : models_)
    if (model.t_last_hours() > t_m_h)
      throw std::domain_error("registry: build instant precedes data of " + key.first);
  t_build_h_ = t_m_h;
}

double TwinRegistry::mean_fit_mse() const {
  if (models_.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& [k, m] : models_) acc += m.fit_mse();
  return acc / models_.size();
}

json TwinRegistry::to_json() const {
  json j;
  j["t_build_h"] = t_build_h_;
  json list = json::array();
  for (const auto& [key, model] : models_) {
    json entry = model.to_json();
    entry["entity"] = key.first;
    entry["attribute"] = key.second;
    list.push_back(std::move(entry));
  }
  j["models"] = list;
  return j;
}

TwinRegistry TwinRegistry::from_json(const json& j) {
  TwinRegistry reg;
  for (const auto& entry : j.at("models"))
    reg.add(entry.at("entity").get<std::string>(),
            entry.at("attribute").get<std::string>(), ForecastModel::from_json(entry));
  reg.t_build_h_ = j.value("t_build_h", 0.0);
  return reg;
}

std::map<std::pair<std::string, std::string>, int> vpd_compensate(
    const TwinRegistry& registry, double t_u_h) {
  std::map<std::pair<std::string, std::string>, int> horizons;
  for (const auto& [key, model] : registry.models()) {
    const double lambda = t_u_h - model.t_last_hours();
    if (lambda < 0.0)
      throw std::domain_error("vpd_compensate: t_u precedes data of " + key.first +
                              "/" + key.second);
    horizons[key] = static_cast<int>(std::lround(lambda));
  }
  return horizons;
}

// ---------------------------------------------------------------------------
// awards

double award_from_satisfaction(const Vector& satisfaction, const Vector& weights,
                               double cap) {
  double acc = 0.0;
  for (Index q = 0; q < satisfaction.size(); ++q)
    acc += weights[q] * std::min(satisfaction[q], cap);
  return acc;
}

namespace {

/// Same metric chain the simulator applies, driven by forecast inputs.
double award_for_power(const AwardInputs& in, const Scenario& sc, int user, int bs,
                       double power_w, double cap) {
  const double noise_w = sc.channel.noise_watt();
  double interference = 0.0;
  for (int l = 0; l < sc.num_bs(); ++l) {
    if (l == bs) continue;
    interference += in.interferer_tx_w(l) * in.gain(user, l);
  }
  const double sinr = sinr_linear(power_w * in.gain(user, bs), interference, noise_w);
  const double rate = data_rate_bps(sinr, sc.channel.bandwidth_hz);
  const double demand = in.demand_bps(user);
  const auto& dm = sc.delay_model;
  const double delay = (rate > demand)
                           ? std::min(dm.packet_bits / (rate - demand), dm.max_delay_s)
                           : dm.max_delay_s;
  const double loss = rate > 0.0
                          ? std::clamp(demand / rate - 1.0, 0.0, 1.0) * dm.loss_scale
                          : dm.loss_scale;
  const double achieved[kNumQos] = {rate, delay, loss};
  Vector s(kNumQos), w(kNumQos);
  for (int q = 0; q < kNumQos; ++q) {
    s[q] = std::min(
        qos_satisfaction(kQosMetrics[q], achieved[q], sc.users[user].qos_required[q]),
        1e6);
    w[q] = sc.users[user].qos_weight[q];
  }
  return award_from_satisfaction(s, w, cap);
}

}  // namespace

AwardMatrix predict_awards(const AwardInputs& inputs, const std::vector<int>& users,
                           const std::vector<int>& bss, const Scenario& scenario,
                           const Eigen::MatrixXi& potential, const AwardConfig& cfg) {
  if (cfg.power_levels < 1) throw std::domain_error("predict_awards: empty power grid");
  AwardMatrix out;
  out.users = users;
  out.bss = bss;
  const Index n = static_cast<Index>(users.size());
  const Index m = static_cast<Index>(bss.size());
  out.award = Matrix::Constant(n, m, -kInf);
  out.power_w = Matrix::Zero(n, m);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < m; ++c) {
      const int i = users[r];
      const int j = bss[c];
      if (!potential(i, j)) continue;  // -inf sentinel: never assignable
      const double p_max = dbm_to_watt(scenario.base_stations[j].max_power_dbm);
      double best_award = -kInf, best_power = 0.0;
      for (int k = 0; k < cfg.power_levels; ++k) {
        const double frac =
            cfg.power_levels == 1
                ? 1.0
                : cfg.min_power_frac +
                      (1.0 - cfg.min_power_frac) * k / (cfg.power_levels - 1);
        const double p = frac * p_max;
        const double award = award_for_power(inputs, scenario, i, j, p,
                                             cfg.satisfaction_cap);
        if (award > best_award + 1e-15) {
          best_award = award;
          best_power = p;
        }
      }
      out.award(r, c) = best_award;
      out.power_w(r, c) = best_power;
    }
  }
  return out;
}

AssignmentSolution balance_and_assign(const AwardMatrix& awards) {
  const Index n = awards.award.rows();
  const Index m = awards.award.cols();
  AssignmentSolution sol;
  if (n == 0 || m == 0) return sol;
  const Index side = std::max(n, m);

  // find the real-entry range to place the sentinel strictly below everything
  double lo = kInf, hi = -kInf;
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < m; ++c)
      if (std::isfinite(awards.award(r, c))) {
        lo = std::min(lo, awards.award(r, c));
        hi = std::max(hi, awards.award(r, c));
      }
  if (!(hi > -kInf)) return sol;  // nothing assignable at all
  const double sentinel = std::min(lo, 0.0) - ((hi - lo) + 1.0);

  Matrix padded = Matrix::Zero(side, side);  // virtual rows/cols carry zero award
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < m; ++c)
      padded(r, c) = std::isfinite(awards.award(r, c)) ? awards.award(r, c) : sentinel;

  const std::vector<int> col_of = hungarian_max(padded);
  for (Index r = 0; r < n; ++r) {
    const Index c = col_of[r];
    if (c >= m) continue;                       // paired with a virtual BS
    if (padded(r, c) <= sentinel) continue;     // forced onto a sentinel edge
    AssignmentPair p;
    p.user = awards.users[r];
    p.bs = awards.bss[c];
    p.predicted_award = awards.award(r, c);
    p.power_w = awards.power_w(r, c);
    sol.pairs.push_back(p);
    sol.total_predicted += p.predicted_award;
  }
  return sol;
}

// ---------------------------------------------------------------------------
// costs

double ldt_attribute_cost(int level, const CostParams& p) {
  if (level < 1 || level > 4) throw std::domain_error("ldt_attribute_cost: bad level");
  return p.samples_per_window * p.bytes_per_sample * p.transport_weight *
         p.level_multiplier[level];
}

double hdt_attribute_cost(const CostParams& p) {
  return p.hdt_samples * p.bytes_per_sample * p.hdt_transport * p.level_multiplier[1];
}

double CostLedger::ldt_total() const {
  return std::accumulate(area_costs.begin(), area_costs.end(), 0.0);
}

double efficiency(double realized_award_total, const CostLedger& ledger) {
  const double denom = ledger.total();
  if (!(denom > 0.0)) throw std::domain_error("efficiency: zero modeling cost");
  return realized_award_total / denom;
}

// ---------------------------------------------------------------------------
// pipeline configuration

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kHierarchical: return "hierarchical";
    case Variant::kHierarchicalNoSync: return "hierarchical_nosync";
    case Variant::kAllInclusive: return "all_inclusive";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "hierarchical") return Variant::kHierarchical;
  if (name == "hierarchical_nosync") return Variant::kHierarchicalNoSync;
  if (name == "all_inclusive") return Variant::kAllInclusive;
  throw std::invalid_argument("unknown variant: " + name);
}

PipelineConfig PipelineConfig::from_config(const Config& cfg, Variant variant,
                                           std::uint64_t seed) {
  PipelineConfig p;
  p.variant = variant;
  p.seed = seed;

  p.valuation.sampen.embedding_dim =
      static_cast<int>(cfg.num_or("pipeline", "sampen_m", 2));
  p.valuation.sampen.tolerance_frac = cfg.num_or("pipeline", "sampen_gamma", 0.2);
  p.valuation.granger_lag = static_cast<int>(cfg.num_or("pipeline", "granger_lag", 3));
  p.valuation.granger_trigger = cfg.num_or("pipeline", "granger_trigger", 0.3);
  p.valuation.granger_floor = cfg.num_or("pipeline", "granger_floor", 0.3);
  p.valuation.granger_alpha = cfg.num_or("pipeline", "granger_alpha", 0.05);
  p.valuation.seed = seed;

  std::vector<double> periods = cfg.array_or("pipeline", "stl_periods", {24.0, 168.0});
  p.stl.periods.clear();
  for (double d : periods) p.stl.periods.push_back(static_cast<int>(d));
  p.stl.seasonal_window =
      static_cast<int>(cfg.num_or("pipeline", "stl_seasonal_window", 11));
  p.stl.inner_iterations = static_cast<int>(cfg.num_or("pipeline", "stl_inner", 2));

  p.narx.target_lags = static_cast<int>(cfg.num_or("pipeline", "narx_lags", 10));
  p.narx.exo_lags = static_cast<int>(cfg.num_or("pipeline", "narx_exo_lags",
                                                p.narx.target_lags));
  p.narx.hidden = static_cast<int>(cfg.num_or("pipeline", "narx_hidden", 15));
  p.narx.learning_rate = cfg.num_or("pipeline", "narx_learning_rate", 0.001);
  p.narx.max_epochs = static_cast<int>(cfg.num_or("pipeline", "narx_max_epochs", 2000));
  p.narx.patience = static_cast<int>(cfg.num_or("pipeline", "narx_patience", 20));
  p.narx.seed = seed;

  p.award.power_levels = static_cast<int>(cfg.num_or("pipeline", "power_levels", 5));
  p.award.min_power_frac = cfg.num_or("pipeline", "min_power_frac", 0.1);
  p.award.satisfaction_cap = cfg.num_or("pipeline", "satisfaction_cap", 2.0);

  p.area.zeta = cfg.num_or("pipeline", "zeta", 0.8);
  p.area.strong_edge_threshold = cfg.num_or("pipeline", "strong_edge_threshold", 0.5);
  p.update_weight = cfg.num_or("pipeline", "adjacency_update_weight", 0.3);

  p.cost.samples_per_window = cfg.num_or("cost", "samples_per_window", 168.0);
  p.cost.bytes_per_sample = cfg.num_or("cost", "bytes_per_sample", 8.0);
  p.cost.transport_weight = cfg.num_or("cost", "transport_weight", 1.0);
  p.cost.hdt_samples = cfg.num_or("cost", "hdt_samples", 24.0);
  p.cost.hdt_transport = cfg.num_or("cost", "hdt_transport", 0.1);
  const auto mults = cfg.array_or("cost", "level_multipliers", {1.0, 2.0, 4.0, 8.0});
  for (size_t i = 0; i < 4 && i < mults.size(); ++i)
    p.cost.level_multiplier[i + 1] = mults[i];

  p.segments = static_cast<int>(cfg.num_or("pipeline", "segments", 0));
  p.max_segments = static_cast<int>(cfg.num_or("pipeline", "max_segments", 6));
  p.ar_lag = static_cast<int>(cfg.num_or("pipeline", "ar_lag", 2));
  p.train_window_h = static_cast<int>(cfg.num_or("pipeline", "train_window_h", 336));
  p.decision_lead_h = static_cast<int>(cfg.num_or("pipeline", "decision_lead_h", 1));
  p.max_exogenous = static_cast<int>(cfg.num_or("pipeline", "max_exogenous", 2));
  p.exo_mode = cfg.str_or("pipeline", "exo_mode", "granger");
  return p;
}

// ---------------------------------------------------------------------------
// round execution

namespace {

struct GridSeries {
  int start_h = 0;  // hour of values[0]
  Vector values;
  int end_h() const { return start_h + static_cast<int>(values.size()) - 1; }
};

/// Device series -> synchronized, hourly-resampled window ending at the last
/// covered hour. Sync is skipped for the no-sync variant.
GridSeries integrate_series(const AttributeSeries& raw, const TraceBundle& trace,
                            bool sync_clock, int window_h, int t_now) {
  AttributeSeries series = raw;
  if (sync_clock) {
    const auto ex = trace.exchanges.find(raw.entity_id);
    if (ex != trace.exchanges.end() && raw.size() >= 2) {
      const ClockEstimate est =
          estimate_clock(raw.timestamps, raw.nominal_interval_s, ex->second);
      series = compensate(raw, est);
    }
  }
  // window of samples, hours
  Vector t_h = series.timestamps / 3600.0;
  const double win_lo = std::max(0.0, static_cast<double>(t_now - window_h));
  std::vector<double> ts, vs;
  for (Index k = 0; k < series.size(); ++k) {
    if (t_h[k] < win_lo || t_h[k] > t_now + 1.0) continue;
    ts.push_back(t_h[k]);
    vs.push_back(series.values[k]);
  }
  if (ts.size() < 8)
    throw std::runtime_error("integrate_series: too few samples for " +
                             raw.entity_id + "/" + raw.attribute);
  const int g0 = static_cast<int>(std::ceil(ts.front()));
  const int g1 = std::min(static_cast<int>(std::floor(ts.back())), t_now);
  if (g1 - g0 < 4)
    throw std::runtime_error("integrate_series: window too short for " +
                             raw.entity_id + "/" + raw.attribute);

  Vector obs_t = Eigen::Map<Vector>(ts.data(), static_cast<Index>(ts.size()));
  Vector obs_v = Eigen::Map<Vector>(vs.data(), static_cast<Index>(vs.size()));
  Vector grid(g1 - g0 + 1);
  for (int h = g0; h <= g1; ++h) grid[h - g0] = h;

  GprConfig gpr;
  gpr.noise_var = 1e-4;  // hourly zero-order-hold quantization acts as noise
  const ResampledSeries res = gpr_resample(obs_t, obs_v, grid, gpr);
  GridSeries out;
  out.start_h = g0;
  out.values = res.mean;
  return out;
}

Vector slice_range(const GridSeries& s, int from_h, int to_h) {
  const int a = from_h - s.start_h;
  const int b = to_h - s.start_h;
  if (a < 0 || b >= s.values.size() || b < a)
    throw std::runtime_error("slice_range: grid does not cover request");
  return s.values.segment(a, b - a + 1);
}

/// Production award inputs: demand and interference from twins, channel gain
/// from geometry (median shadowing, unit mean fading).
class TwinAwardInputs : public AwardInputs {
 public:
  TwinAwardInputs(const Scenario& sc, const NetworkSnapshot& now,
                  const TwinRegistry& registry,
                  const std::map<std::pair<std::string, std::string>, int>& horizons,
                  bool vpd_enabled)
      : sc_(sc), now_(now), registry_(registry), horizons_(horizons),
        vpd_(vpd_enabled) {
    const int n = sc.num_users();
    const int m = sc.num_bs();
    gain_.resize(n, m);
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector2d pos = now.user_pos.row(i);
      for (int j = 0; j < m; ++j) {
        const auto& bs = sc.base_stations[j];
        const double d = std::max((pos - bs.position).norm(), 1.0);
        gain_(i, j) = db_to_linear(-path_loss_db(bs.tier, d, sc.path_loss));
      }
    }
    demand_cache_.assign(n, kNaN);
    tx_cache_.assign(m, kNaN);
  }

  double gain(int user, int bs) const override { return gain_(user, bs); }

  double demand_bps(int user) const override {
    double& slot = demand_cache_[user];
    if (std::isnan(slot)) {
      const ForecastModel& twin = registry_.require(user_entity_id(user),
                                                    kAttrTrafficLoad);
      const int h = vpd_ ? horizons_.at({user_entity_id(user), kAttrTrafficLoad}) : 0;
      slot = std::max(twin.value_at_horizon(h), 0.0);
    }
    return slot;
  }

  double interferer_tx_w(int bs) const override {
    double& slot = tx_cache_[bs];
    if (std::isnan(slot)) {
      const double p_max = dbm_to_watt(sc_.base_stations[bs].max_power_dbm);
      const ForecastModel* twin = registry_.find(bs_entity_id(bs), kAttrTrafficLoad);
      double load;
      if (twin) {
        const int h = vpd_ ? horizons_.at({bs_entity_id(bs), kAttrTrafficLoad}) : 0;
        load = twin->value_at_horizon(h);
      } else {
        load = now_.bs_load_bps[bs];  // outside every area: current situation
      }
      slot = load > 0.0 ? p_max : 0.0;
    }
    return slot;
  }

 private:
  const Scenario& sc_;
  const NetworkSnapshot& now_;
  const TwinRegistry& registry_;
  const std::map<std::pair<std::string, std::string>, int>& horizons_;
  bool vpd_;
  Matrix gain_;
  mutable std::vector<double> demand_cache_;
  mutable std::vector<double> tx_cache_;
};

/// Matching repeats inside one area until users are served or power budgets
/// run dry; each pass allocates at most one user per BS.
std::vector<AssignmentPair> assign_area(const AwardInputs& inputs,
                                        const TargetArea& area, const Scenario& sc,
                                        const Eigen::MatrixXi& potential,
                                        const AwardConfig& award_cfg,
                                        std::vector<double>& budget_w,
                                        double* predicted_total) {
  std::vector<AssignmentPair> out;
  std::vector<int> remaining = area.users;
  for (int round = 0; round < 64 && !remaining.empty(); ++round) {
    AwardMatrix awards = predict_awards(inputs, remaining, area.bss, sc, potential,
                                        award_cfg);
    // budget-restricted: recompute best level among affordable powers
    for (Index r = 0; r < awards.award.rows(); ++r)
      for (Index c = 0; c < awards.award.cols(); ++c) {
        if (!std::isfinite(awards.award(r, c))) continue;
        const int j = awards.bss[c];
        if (awards.power_w(r, c) <= budget_w[j] + 1e-12) continue;
        // preferred level no longer affordable; rebuild from scratch
        const double p_max = dbm_to_watt(sc.base_stations[j].max_power_dbm);
        double best_award = -kInf, best_power = 0.0;
        for (int k = 0; k < award_cfg.power_levels; ++k) {
          const double frac =
              award_cfg.power_levels == 1
                  ? 1.0
                  : award_cfg.min_power_frac +
                        (1.0 - award_cfg.min_power_frac) * k /
                            (award_cfg.power_levels - 1);
          const double p = frac * p_max;
          if (p > budget_w[j] + 1e-12) break;
          const double a = award_for_power(inputs, sc, awards.users[r], j, p,
                                           award_cfg.satisfaction_cap);
          if (a > best_award + 1e-15) {
            best_award = a;
            best_power = p;
          }
        }
        awards.award(r, c) = best_power > 0.0 ? best_award : -kInf;
        awards.power_w(r, c) = best_power;
      }

    const AssignmentSolution sol = balance_and_assign(awards);
    bool any = false;
    std::set<int> assigned;
    for (const auto& p : sol.pairs) {
      if (p.predicted_award <= 0.0) continue;
      out.push_back(p);
      if (predicted_total) *predicted_total += p.predicted_award;
      budget_w[p.bs] -= p.power_w;
      assigned.insert(p.user);
      any = true;
    }
    if (!any) break;
    std::erase_if(remaining, [&](int u) { return assigned.count(u) > 0; });
  }
  return out;
}

}  // namespace

json RoundReport::to_json() const {
  json j;
  j["variant"] = variant_name(variant);
  j["t_now"] = t_now;
  j["t_u"] = t_u;
  j["efficiency"] = efficiency_q;
  j["realized_total_award"] = realized_total;
  j["predicted_total_award"] = predicted_total;
  j["cost"] = {{"hdt", hdt_cost}, {"ldt", ldt_cost}, {"total", hdt_cost + ldt_cost}};
  j["mean_satisfaction_before"] = mean_satisfaction_before;
  j["mean_satisfaction_after"] = mean_satisfaction_after;
  j["mean_model_mse"] = mean_model_mse;
  j["num_segments"] = num_segments;
  j["num_areas"] = num_areas;
  j["twins_fitted"] = twins_fitted;
  j["constraints_ok"] = constraints_ok;
  json pairs = json::array();
  for (size_t k = 0; k < assignments.size(); ++k) {
    const auto& p = assignments[k];
    pairs.push_back({{"user", p.user},
                     {"bs", p.bs},
                     {"power_dbm", watt_to_dbm(std::max(p.power_w, 1e-12))},
                     {"predicted_award", p.predicted_award},
                     {"award_before", k < user_award_before.size() ? user_award_before[k] : 0.0},
                     {"award_after", k < user_award_after.size() ? user_award_after[k] : 0.0}});
  }
  j["assignments"] = pairs;
  j["satisfaction_before_min"] =
      std::vector<double>(satisfaction_before_min.data(),
                          satisfaction_before_min.data() + satisfaction_before_min.size());
  j["satisfaction_after_min"] =
      std::vector<double>(satisfaction_after_min.data(),
                          satisfaction_after_min.data() + satisfaction_after_min.size());
  j["bs_load_after"] = std::vector<double>(bs_load_after.data(),
                                           bs_load_after.data() + bs_load_after.size());
  j["diagnostics"] = diagnostics;
  return j;
}

RoundReport run_round(Simulator& sim, const TraceBundle& trace,
                      const PipelineConfig& cfg) {
  RoundReport report;
  report.variant = cfg.variant;
  const Scenario& sc = sim.scenario();
  const int n = sc.num_users();
  const int m = sc.num_bs();
  const int t_now = sim.ticks() - 1;
  report.t_now = t_now;
  report.t_u = t_now + cfg.decision_lead_h;

  const bool hierarchical = cfg.variant != Variant::kAllInclusive;
  const bool sync = cfg.variant == Variant::kHierarchical;

  const NetworkSnapshot& now = sim.latest();

  auto stage = [&](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
    }
  };

  // ----- valuation (selection for hierarchical; cost accounting for all) ----
  std::vector<ModelingValue> values;
  stage("valuation", [&] {
    ValuationConfig vcfg = cfg.valuation;
    vcfg.seed = cfg.seed;
    values = evaluate_modeling_values(sim, vcfg);
    differentiate(values, vcfg);
  });
  auto level_of = [&](int user, const std::string& attr) {
    for (const auto& v : values)
      if (v.entity_id == user_entity_id(user) && v.attribute == attr) return v.level;
    return 4;
  };

  // selected attributes per user: L1..L3 for hierarchical, everything for
  // the all-inclusive baseline
  const std::vector<std::string> all_attrs = {kAttrThroughput, kAttrDelay,
                                              kAttrPacketLoss, kAttrTrafficLoad,
                                              kAttrMobility,   kAttrChannelQuality};
  std::vector<std::vector<std::string>> selected(n);
  for (int i = 0; i < n; ++i)
    for (const auto& a : all_attrs)
      if (!hierarchical || level_of(i, a) <= 3) selected[i].push_back(a);

  Vector user_cost = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    for (const auto& a : selected[i])
      user_cost[i] += ldt_attribute_cost(level_of(i, a), cfg.cost);

  // ----- situation + segmentation -----------------------------------------
  const Eigen::MatrixXi potential = sim.potential_links();
  Matrix satisfaction = now.satisfaction;
  Vector sat_min(n);
  IntVector satisfied(n);
  for (int i = 0; i < n; ++i) {
    double mn = kInf;
    for (int q = 0; q < kNumQos; ++q) mn = std::min(mn, satisfaction(i, q));
    sat_min[i] = mn;
    satisfied[i] = mn >= 1.0 ? 1 : 0;
  }
  report.satisfaction_before_min = sat_min.cwiseMin(10.0);
  report.mean_satisfaction_before = report.satisfaction_before_min.mean();

  std::vector<TargetArea> areas;
  LinkDemandModel demand_model;
  Matrix demand;
  stage("segmentation", [&] {
    demand_model = LinkDemandModel::fit(sim.history(), cfg.ar_lag,
                                        cfg.train_window_h);
    demand = demand_model.predict();
    if (hierarchical) {
      const ActivityGraph graph =
          build_adjacency(sim.history(), potential, demand_model, t_now);
      const Matrix full = graph.full();
      const int desired =
          cfg.segments > 0 ? cfg.segments
                           : eigengap_segment_count(full, cfg.max_segments);
      const PartitionResult part =
          ratio_cut_partition(full, std::min<int>(desired, n + m), cfg.seed);
      report.num_segments = part.num_segments;
      const auto segments = split_segments(part, n, m);

      Vector capacity(m), offered(m);
      for (int j = 0; j < m; ++j) {
        capacity[j] = sc.base_stations[j].capacity_bps;
        offered[j] = now.bs_load_bps[j];
      }
      const IntVector loaded = load_indicator({offered, capacity, cfg.area.zeta});
      const Matrix updated = update_adjacency(graph, sat_min, satisfied, loaded,
                                              offered, capacity, cfg.area.zeta,
                                              cfg.update_weight);
      Matrix qos_w(n, kNumQos);
      for (int i = 0; i < n; ++i)
        for (int q = 0; q < kNumQos; ++q) qos_w(i, q) = sc.users[i].qos_weight[q];
      for (const auto& seg : segments) {
        TargetArea area = identify_target_area(seg, satisfaction, qos_w, user_cost,
                                               demand, potential, capacity, updated,
                                               cfg.area);
        if (!area.empty()) areas.push_back(std::move(area));
      }
    } else {
      // all inclusive: the whole network is the one "area"
      TargetArea area;
      for (int i = 0; i < n; ++i) area.users.push_back(i);
      for (int j = 0; j < m; ++j) area.bss.push_back(j);
      for (int i = 0; i < n; ++i) area.cost_sum += user_cost[i];
      areas.push_back(std::move(area));
      report.num_segments = 1;
    }
  });
  report.num_areas = static_cast<int>(areas.size());

  // ----- ledger -------------------------------------------------------------
  CostLedger ledger;
  if (hierarchical) {
    int l1_attrs = 0;
    for (int i = 0; i < n; ++i)
      for (const auto& a : all_attrs)
        if (level_of(i, a) == 1) ++l1_attrs;
    ledger.hdt_cost = l1_attrs * hdt_attribute_cost(cfg.cost);
    if (ledger.hdt_cost <= 0.0)  // coarse demand twins always run in HDT
      ledger.hdt_cost = n * hdt_attribute_cost(cfg.cost);
  }
  for (const auto& area : areas) {
    double theta = 0.0;
    for (int i : area.users) theta += user_cost[i];
    ledger.area_costs.push_back(theta);
  }
  report.hdt_cost = ledger.hdt_cost;
  report.ldt_cost = ledger.ldt_total();

  // ----- integration + twin fitting ----------------------------------------
  TwinRegistry registry;
  stage("integration+modeling", [&] {
    std::set<int> area_bss;
    for (const auto& area : areas)
      for (int j : area.bss) area_bss.insert(j);

    // BS load twins first (exogenous candidates for demand twins)
    std::map<int, GridSeries> bs_load;
    for (int j : area_bss) {
      const AttributeSeries* raw = trace.find(bs_entity_id(j), kAttrTrafficLoad);
      if (!raw) continue;
      bs_load[j] = integrate_series(*raw, trace, sync, cfg.train_window_h, t_now);
    }
    for (const auto& area : areas) {
      for (int i : area.users) {
        const AttributeSeries* raw = trace.find(user_entity_id(i), kAttrTrafficLoad);
        if (!raw)
          throw std::runtime_error("missing trace series for " + user_entity_id(i));
        const GridSeries gs =
            integrate_series(*raw, trace, sync, cfg.train_window_h, t_now);

        // exogenous: serving-BS load when Granger-causal
        std::vector<Vector> exo;
        if (cfg.exo_mode == "granger") {
          const int j = now.serving_bs(i);
          auto it = bs_load.find(j);
          if (it != bs_load.end()) {
            const int from = std::max(gs.start_h, it->second.start_h);
            const int to = std::min(gs.end_h(), it->second.end_h());
            if (to - from > 8 * cfg.valuation.granger_lag) {
              const Vector ty = slice_range(gs, from, to);
              const Vector tx = slice_range(it->second, from, to);
              const GrangerResult g =
                  granger_causality(tx, ty, cfg.valuation.granger_lag,
                                    cfg.valuation.granger_alpha);
              if (g.causal && static_cast<int>(exo.size()) < cfg.max_exogenous)
                exo.push_back(tx);
            }
          }
        }
        NarxConfig ncfg = cfg.narx;
        ncfg.seed = cfg.seed ^ (0x9e3779b97f4a7c15ull * (i + 1));
        StlConfig scfg = cfg.stl;
        Vector target = gs.values;
        if (static_cast<int>(exo.size()) > 0) {
          // align exo to the target length from the tail
          for (auto& e : exo)
            if (e.size() > target.size()) e = e.tail(target.size());
            else if (e.size() < target.size()) target = target.tail(e.size());
        }
        ForecastModel twin =
            static_cast<int>(target.size()) >= 2 * scfg.periods.back() + 8
                ? ForecastModel::fit_stl_narx(target, exo, gs.end_h(), scfg, ncfg)
                : ForecastModel::fit_narx(target, exo, gs.end_h(), ncfg);
        registry.add(user_entity_id(i), kAttrTrafficLoad, std::move(twin));
      }
    }
    for (auto& [j, gs] : bs_load) {
      NarxConfig ncfg = cfg.narx;
      ncfg.seed = cfg.seed ^ (0xc2b2ae3d27d4eb4full * (j + 1));
      ForecastModel twin =
          static_cast<int>(gs.values.size()) >= 2 * cfg.stl.periods.back() + 8
              ? ForecastModel::fit_stl_narx(gs.values, {}, gs.end_h(), cfg.stl,
                                            ncfg)
              : ForecastModel::fit_narx(gs.values, {}, gs.end_h(), ncfg);
      registry.add(bs_entity_id(j), kAttrTrafficLoad, std::move(twin));
    }
    registry.set_build_instant(t_now);
  });
  report.twins_fitted = static_cast<int>(registry.size());
  report.mean_model_mse = registry.mean_fit_mse();

  // ----- delay compensation + assignment ------------------------------------
  std::vector<PinnedLink> pins;
  stage("assignment", [&] {
    const auto horizons = vpd_compensate(registry, report.t_u);
    const TwinAwardInputs inputs(sc, now, registry, horizons, sync);
    std::vector<double> budget_w(m);
    for (int j = 0; j < m; ++j)
      budget_w[j] = dbm_to_watt(sc.base_stations[j].max_power_dbm);
    for (const auto& area : areas) {
      const auto pairs = assign_area(inputs, area, sc, potential, cfg.award,
                                     budget_w, &report.predicted_total);
      for (const auto& p : pairs) {
        report.assignments.push_back(p);
        pins.push_back({p.user, p.bs, p.power_w});
      }
    }
  });

  // ----- apply + measure -----------------------------------------------------
  stage("apply+measure", [&] {
    Vector award_before(report.assignments.size());
    for (size_t k = 0; k < report.assignments.size(); ++k) {
      const int i = report.assignments[k].user;
      Vector w(kNumQos), s(kNumQos);
      for (int q = 0; q < kNumQos; ++q) {
        w[q] = sc.users[i].qos_weight[q];
        s[q] = satisfaction(i, q);
      }
      award_before[k] = award_from_satisfaction(s, w, cfg.award.satisfaction_cap);
    }

    sim.apply_policy(pins);
    for (int t = t_now + 1; t <= report.t_u; ++t) {
      const NetworkSnapshot& snap = sim.step();
      const ConstraintReport cr = check_constraints(snap, sc);
      if (!cr.ok) {
        report.constraints_ok = false;
        report.diagnostics.push_back("tick " + std::to_string(snap.tick) + ": " +
                                     cr.detail);
      }
    }
    const NetworkSnapshot& at_u = sim.latest();
    report.user_award_before.assign(award_before.data(),
                                    award_before.data() + award_before.size());
    for (const auto& p : report.assignments) {
      Vector w(kNumQos), s(kNumQos);
      for (int q = 0; q < kNumQos; ++q) {
        w[q] = sc.users[p.user].qos_weight[q];
        s[q] = at_u.satisfaction(p.user, q);
      }
      const double realized = award_from_satisfaction(s, w, cfg.award.satisfaction_cap);
      report.user_award_after.push_back(realized);
      report.realized_total += realized;
    }
    Vector after_min(n);
    for (int i = 0; i < n; ++i) {
      double mn = kInf;
      for (int q = 0; q < kNumQos; ++q) mn = std::min(mn, at_u.satisfaction(i, q));
      after_min[i] = std::min(mn, 10.0);
    }
    report.satisfaction_after_min = after_min;
    report.mean_satisfaction_after = after_min.mean();
    report.bs_load_after = at_u.bs_load_bps;
    report.efficiency_q = efficiency(report.realized_total, ledger);
  });

  return report;
}

}  // namespace hettwin
