#include "hettwin/experiment.hpp"

#include "hettwin/csv.hpp"
#include "hettwin/twin/stl.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

namespace hettwin {

namespace fs = std::filesystem;

RoundReport run_point(const Config& scenario_cfg, Variant variant, std::uint64_t seed,
                      int users_override) {
  Config cfg = scenario_cfg;
  cfg.set_num("network", "seed", static_cast<double>(seed));
  if (users_override > 0)
    cfg.set_num("network", "users", static_cast<double>(users_override));

  const Scenario sc = Scenario::from_config(cfg);
  Simulator sim(sc);
  TraceBundle trace = generate_trace(
      sim, sc.trace.duration_h, sc.clock,
      [&] {
        std::vector<int> periods;
        for (double p : cfg.array_or("pipeline", "stl_periods", {24.0}))
          periods.push_back(static_cast<int>(p));
        std::vector<double> out(periods.begin(), periods.end());
        return out;
      }());

  const PipelineConfig pipeline = PipelineConfig::from_config(cfg, variant, seed);
  return run_round(sim, trace, pipeline);
}

ResultTable run_experiment(const ExperimentPlan& plan, const Config& scenario_cfg) {
  struct Point {
    Variant variant;
    int users;
    std::uint64_t seed;
  };
  std::vector<Point> points;
  const std::vector<int> scales =
      plan.user_sweep.empty()
          ? std::vector<int>{static_cast<int>(scenario_cfg.num_or("network", "users", 25))}
          : plan.user_sweep;
  for (Variant v : plan.variants)
    for (int u : scales)
      for (std::uint64_t s : plan.seeds) points.push_back({v, u, s});

  fs::create_directories(plan.out_dir);
  ResultTable table;
  table.rows.resize(points.size());
  std::mutex io_mutex;

  auto run_one = [&](size_t idx) {
    const Point& pt = points[idx];
    const RoundReport report =
        run_point(scenario_cfg, pt.variant, pt.seed, pt.users);
    ResultRow row;
    row.variant = variant_name(pt.variant);
    row.scale = pt.users;
    row.seed = pt.seed;
    row.efficiency = report.efficiency_q;
    row.mean_satisfaction = report.mean_satisfaction_after;
    row.mean_model_mse = report.mean_model_mse;
    table.rows[idx] = row;
    if (plan.emit_round_json) {
      const std::string name = row.variant + "_u" + std::to_string(row.scale) + "_s" +
                               std::to_string(row.seed) + ".json";
      std::lock_guard<std::mutex> lock(io_mutex);
      std::ofstream out(fs::path(plan.out_dir) / name, std::ios::binary);
      out << report.to_json().dump(2) << "\n";
    }
  };

  const int workers = std::max(1, plan.workers);
  if (workers == 1) {
    for (size_t i = 0; i < points.size(); ++i) run_one(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < points.size(); i = next.fetch_add(1))
          run_one(i);
      });
    for (auto& t : pool) t.join();
  }

  std::sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) {
    if (a.variant != b.variant) return a.variant < b.variant;
    if (a.scale != b.scale) return a.scale < b.scale;
    return a.seed < b.seed;
  });

  write_results_csv(table, (fs::path(plan.out_dir) / "results.csv").string());

  if (plan.emit_figure_data) {
    // efficiency-by-scale table mirrors results.csv but keyed for plotting
    std::ofstream eff(fs::path(plan.out_dir) / "fig_efficiency.csv", std::ios::binary);
    eff << "scale,variant,seed,efficiency\n";
    for (const auto& r : table.rows)
      eff << csv::join_row({std::to_string(r.scale), r.variant,
                            std::to_string(r.seed), csv::num(r.efficiency)});
  }
  return table;
}

void write_results_csv(const ResultTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "schema_version,variant,scale,seed,efficiency,mean_satisfaction,mean_model_mse\n";
  for (const auto& r : table.rows)
    out << csv::join_row({std::to_string(table.schema_version), r.variant,
                          std::to_string(r.scale), std::to_string(r.seed),
                          csv::num(r.efficiency), csv::num(r.mean_satisfaction),
                          csv::num(r.mean_model_mse)});
}

ResultTable read_results_csv(const std::string& path) {
  ResultTable table;
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows[0].size() != 7)
    throw std::runtime_error("results.csv: bad header");
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 7)
      throw std::runtime_error("results.csv: row " + std::to_string(i) +
                               " has wrong arity");
    table.schema_version = std::stoi(r[0]);
    ResultRow row;
    row.variant = r[1];
    row.scale = std::stoi(r[2]);
    row.seed = std::stoull(r[3]);
    row.efficiency = std::stod(r[4]);
    row.mean_satisfaction = std::stod(r[5]);
    row.mean_model_mse = std::stod(r[6]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// figure-style data

void write_decomposition_csv(const Simulator& sim, int user,
                             const std::vector<int>& periods,
                             const std::string& path) {
  const std::vector<std::string> attrs = {kAttrThroughput, kAttrDelay,
                                          kAttrTrafficLoad, kAttrPacketLoss};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "attribute,t_h,value,trend,seasonal,residual\n";
  StlConfig cfg;
  cfg.periods = periods;
  for (const auto& attr : attrs) {
    const Vector x = attribute_tick_series(sim, user, attr);
    const STLComponents stl = stl_decompose(x, cfg);
    const Vector season = stl.seasonal_total();
    for (Index t = 0; t < x.size(); ++t)
      out << csv::join_row({attr, std::to_string(t), csv::num(x[t]),
                            csv::num(stl.trend[t]), csv::num(season[t]),
                            csv::num(stl.residual[t])});
  }
}

std::vector<MethodComparisonRow> method_comparison(std::uint64_t seed, int train_hours,
                                                   int test_hours) {
  const int total = train_hours + test_hours;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto ar1_noise = [&](double rho, double sigma, int len) {
    Vector e(len);
    double prev = 0.0;
    for (int t = 0; t < len; ++t) {
      prev = rho * prev + sigma * gauss(rng);
      e[t] = prev;
    }
    return e;
  };

  struct Synthetic {
    std::string name;
    Vector series;
    Vector exo;  // empty when unused
  };
  std::vector<Synthetic> sets;

  // daily-patterned attributes
  auto seasonal_series = [&](double base, double amp, double noise) {
    Vector x(total);
    const Vector e = ar1_noise(0.6, noise, total);
    for (int t = 0; t < total; ++t)
      x[t] = base + amp * std::sin(2.0 * std::numbers::pi * t / 24.0) +
             0.3 * amp * std::sin(2.0 * std::numbers::pi * t / 12.0 + 0.7) + e[t];
    return x;
  };
  sets.push_back({"throughput", seasonal_series(10.0, 3.0, 0.4), {}});
  sets.push_back({"delay", seasonal_series(50.0, 12.0, 1.5), {}});
  sets.push_back({"packet_loss", seasonal_series(2.0, 0.8, 0.12), {}});

  // load: no clear daily pattern, but driven by a neighbor with a 2 h lag
  {
    Vector x = ar1_noise(0.9, 1.0, total);
    x.array() += 5.0;
    Vector y(total);
    const Vector e = ar1_noise(0.3, 0.25, total);
    for (int t = 0; t < total; ++t) {
      const double drv = t >= 2 ? x[t - 2] : x[0];
      y[t] = 1.2 * drv + 0.4 * std::tanh(drv - 5.0) + e[t];
    }
    sets.push_back({"traffic_load", y, x});
  }

  std::vector<MethodComparisonRow> rows;
  for (const auto& s : sets) {
    const Vector train = s.series.head(train_hours);
    const Vector truth = s.series.tail(test_hours);
    const bool has_exo = s.exo.size() > 0;
    const Vector exo_train = has_exo ? Vector(s.exo.head(train_hours)) : Vector();
    std::vector<Vector> exo_hist, exo_future;
    if (has_exo) {
      exo_hist.push_back(exo_train);
      exo_future.push_back(s.exo.tail(test_hours));
    }

    NarxConfig ncfg;
    ncfg.target_lags = 10;
    ncfg.exo_lags = 10;
    ncfg.hidden = 15;
    ncfg.max_epochs = 800;
    ncfg.seed = seed;
    StlConfig scfg;
    scfg.periods = {24};

    const ForecastModel arima =
        ForecastModel::fit_arima(train, train_hours - 1, 2, 2);
    rows.push_back({s.name, "arima", mse(arima.forecast(test_hours), truth)});

    const ForecastModel narx =
        ForecastModel::fit_narx(train, exo_hist, train_hours - 1, ncfg);
    rows.push_back({s.name, "narx",
                    mse(narx.forecast(test_hours, has_exo ? &exo_future : nullptr),
                        truth)});

    const ForecastModel stl_narx = ForecastModel::fit_stl_narx(
        train, exo_hist, train_hours - 1, scfg, ncfg);
    rows.push_back({s.name, "stl_narx",
                    mse(stl_narx.forecast(test_hours, has_exo ? &exo_future : nullptr),
                        truth)});
  }
  return rows;
}

void write_method_comparison_csv(const std::vector<MethodComparisonRow>& rows,
                                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "attribute,method,mse\n";
  for (const auto& r : rows)
    out << csv::join_row({r.attribute, r.method, csv::num(r.mse)});
}

std::vector<std::uint64_t> parse_seed_spec(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t lo = std::stoull(spec.substr(0, dots));
    const std::uint64_t hi = std::stoull(spec.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("seed range is reversed: " + spec);
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  size_t pos = 0;
  while (pos < spec.size()) {
    size_t comma = spec.find(',', pos);
    if (comma == std::string::npos) comma = spec.size();
    const std::string tok = spec.substr(pos, comma - pos);
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
    pos = comma + 1;
  }
  if (seeds.empty()) throw std::invalid_argument("empty seed list: " + spec);
  return seeds;
}

}  // namespace hettwin
