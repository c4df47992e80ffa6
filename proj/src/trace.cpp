#include "hettwin/hetnet/trace.hpp"

#include "hettwin/csv.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <random>

namespace hettwin {

using nlohmann::json;

const AttributeSeries* TraceBundle::find(const std::string& entity,
                                         const std::string& attribute) const {
  for (const auto& s : series)
    if (s.entity_id == entity && s.attribute == attribute) return &s;
  return nullptr;
}

std::vector<std::pair<std::string, std::string>> default_attribute_levels() {
  return {{kAttrTrafficLoad, "L1"},   {kAttrThroughput, "L2"},
          {kAttrDelay, "L2"},         {kAttrPacketLoss, "L2"},
          {kAttrChannelQuality, "L3"}, {kAttrMobility, "L4"}};
}

namespace {

constexpr double kTickSeconds = 3600.0;

struct DeviceClock {
  DeviceClockTruth truth;
  double corrupt(double t) const { return (1.0 + truth.skew) * t + truth.offset_s; }
};

AttributeSeries sample_series(const std::string& entity, const std::string& attr,
                              const std::vector<double>& tick_values,
                              double interval_s, double duration_s,
                              const DeviceClock& clock, double missing_rate,
                              std::mt19937_64& drop_stream) {
  AttributeSeries out;
  out.entity_id = entity;
  out.attribute = attr;
  out.nominal_interval_s = interval_s;
  std::vector<double> ts, vs;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double t = interval_s; t <= duration_s; t += interval_s) {
    const bool keep = missing_rate <= 0.0 || unit(drop_stream) >= missing_rate;
    if (!keep) continue;
    const int tick = std::min(static_cast<int>(t / kTickSeconds),
                              static_cast<int>(tick_values.size()) - 1);
    ts.push_back(clock.corrupt(t));
    vs.push_back(tick_values[tick]);
  }
  out.timestamps = Eigen::Map<Vector>(ts.data(), static_cast<Index>(ts.size()));
  out.values = Eigen::Map<Vector>(vs.data(), static_cast<Index>(vs.size()));
  return out;
}

ExchangeRecord make_exchange(const DeviceClock& clock, double t_start,
                             double jitter_s, std::mt19937_64& stream) {
  // symmetric link: fixed propagation both ways, short device turnaround
  const double prop = 0.5e-3;
  const double turnaround = 1.0e-3;
  std::uniform_real_distribution<double> jit(-jitter_s, jitter_s);
  auto j = [&]() { return jitter_s > 0.0 ? jit(stream) : 0.0; };
  ExchangeRecord ex;
  ex.t_con_tx = t_start;
  ex.t_dev_rx = clock.corrupt(t_start + prop) + j();
  const double t_reply = t_start + prop + turnaround;
  ex.t_dev_tx = clock.corrupt(t_reply) + j();
  ex.t_con_rx = t_reply + prop + j();
  return ex;
}

}  // namespace

TraceBundle generate_trace(Simulator& sim, double duration_h,
                           const ClockCorruption& corruption,
                           const std::vector<double>& stl_periods_h) {
  const Scenario& sc = sim.scenario();
  const int ticks = static_cast<int>(duration_h);
  sim.run_to(ticks);

  TraceBundle bundle;
  bundle.duration_s = duration_h * kTickSeconds;
  for (double p : stl_periods_h)
    if (duration_h < p) bundle.stl_period_warning = true;

  Rng rng(sc.seed);
  const auto& hist = sim.history();
  const int n = sc.num_users();
  const int m = sc.num_bs();

  auto clock_for = [&](const std::string& entity, std::uint64_t idx) {
    auto stream = rng.stream("clock_" + entity, idx);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    DeviceClock c;
    c.truth.skew = corruption.skew_ppm_max * 1e-6 * unit(stream);
    c.truth.offset_s = corruption.offset_s_max * unit(stream);
    return c;
  };
  auto interval_for = [&](std::uint64_t idx, const char* kind) {
    auto stream = rng.stream(std::string("interval_") + kind, idx);
    std::uniform_real_distribution<double> uni(sc.trace.interval_min_s,
                                               sc.trace.interval_max_s);
    return uni(stream);
  };

  // per-user attribute series from the tick history
  for (int i = 0; i < n; ++i) {
    std::vector<double> thr(ticks), dly(ticks), los(ticks), mob(ticks), chq(ticks),
        act(ticks);
    for (int t = 0; t < ticks; ++t) {
      const auto& s = hist[t];
      thr[t] = s.achieved(i, 0);
      dly[t] = s.achieved(i, 1);
      los[t] = s.achieved(i, 2);
      mob[t] = s.user_speed_mps[i];
      const int j = s.serving_bs(i);
      chq[t] = j >= 0 ? linear_to_db(std::max(s.gain(i, j), 1e-30)) : -300.0;
      act[t] = s.demand_bps[i];  // the user's own offered traffic
    }
    const std::string id = user_entity_id(i);
    const DeviceClock clock = clock_for(id, i);
    const double beta = interval_for(i, "ue");
    auto drops = rng.stream("missing_ue", i);
    bundle.series.push_back(sample_series(id, kAttrThroughput, thr, beta,
                                          bundle.duration_s, clock,
                                          sc.trace.missing_rate, drops));
    bundle.series.push_back(sample_series(id, kAttrDelay, dly, beta, bundle.duration_s,
                                          clock, sc.trace.missing_rate, drops));
    bundle.series.push_back(sample_series(id, kAttrPacketLoss, los, beta,
                                          bundle.duration_s, clock,
                                          sc.trace.missing_rate, drops));
    bundle.series.push_back(sample_series(id, kAttrMobility, mob, beta,
                                          bundle.duration_s, clock,
                                          sc.trace.missing_rate, drops));
    bundle.series.push_back(sample_series(id, kAttrChannelQuality, chq, beta,
                                          bundle.duration_s, clock,
                                          sc.trace.missing_rate, drops));
    bundle.series.push_back(sample_series(id, kAttrTrafficLoad, act, beta,
                                          bundle.duration_s, clock,
                                          sc.trace.missing_rate, drops));
    bundle.clock_truth[id] = clock.truth;
    auto ex_stream = rng.stream("exchange", i);
    bundle.exchanges[id] = make_exchange(clock, 30.0 + 0.25 * i,
                                         corruption.exchange_jitter_s, ex_stream);
  }

  // per-BS offered load
  for (int j = 0; j < m; ++j) {
    std::vector<double> load(ticks);
    for (int t = 0; t < ticks; ++t) load[t] = hist[t].bs_load_bps[j];
    const std::string id = bs_entity_id(j);
    const DeviceClock clock = clock_for(id, 1000 + j);
    const double beta = interval_for(j, "bs");
    auto drops = rng.stream("missing_bs", j);
    bundle.series.push_back(sample_series(id, kAttrTrafficLoad, load, beta,
                                          bundle.duration_s, clock,
                                          sc.trace.missing_rate, drops));
    bundle.clock_truth[id] = clock.truth;
    auto ex_stream = rng.stream("exchange_bs", j);
    bundle.exchanges[id] = make_exchange(clock, 10.0 + 0.25 * j,
                                         corruption.exchange_jitter_s, ex_stream);
  }
  return bundle;
}

void write_trace_csv(const TraceBundle& bundle, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "entity_id,attribute,timestamp_s,value\n";
  for (const auto& s : bundle.series)
    for (Index k = 0; k < s.size(); ++k)
      out << csv::join_row(
          {s.entity_id, s.attribute, csv::num(s.timestamps[k]), csv::num(s.values[k])});
}

void write_clock_sidecar(const TraceBundle& bundle, const std::string& path) {
  json j;
  j["duration_s"] = bundle.duration_s;
  j["stl_period_warning"] = bundle.stl_period_warning;
  for (const auto& [id, truth] : bundle.clock_truth) {
    j["clocks"][id] = {{"skew", truth.skew}, {"offset_s", truth.offset_s}};
  }
  for (const auto& [id, ex] : bundle.exchanges) {
    j["exchanges"][id] = {{"t_con_tx", ex.t_con_tx},
                          {"t_dev_rx", ex.t_dev_rx},
                          {"t_dev_tx", ex.t_dev_tx},
                          {"t_con_rx", ex.t_con_rx}};
  }
  for (const auto& s : bundle.series) {
    j["intervals"][s.entity_id][s.attribute] = s.nominal_interval_s;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

TraceBundle read_trace_csv(const std::string& csv_path, const std::string& sidecar_path) {
  TraceBundle bundle;
  auto rows = csv::read_file(csv_path);
  if (rows.empty()) throw std::runtime_error("empty trace CSV: " + csv_path);
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::vector<double>>>
      acc;
  std::vector<std::pair<std::string, std::string>> order;
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 4)
      throw std::runtime_error("trace CSV row " + std::to_string(r) + ": expected 4 fields");
    auto key = std::make_pair(row[0], row[1]);
    if (!acc.count(key)) order.push_back(key);
    acc[key].first.push_back(std::stod(row[2]));
    acc[key].second.push_back(std::stod(row[3]));
  }
  for (const auto& key : order) {
    AttributeSeries s;
    s.entity_id = key.first;
    s.attribute = key.second;
    auto& [ts, vs] = acc[key];
    s.timestamps = Eigen::Map<Vector>(ts.data(), static_cast<Index>(ts.size()));
    s.values = Eigen::Map<Vector>(vs.data(), static_cast<Index>(vs.size()));
    bundle.series.push_back(std::move(s));
  }
  if (!sidecar_path.empty()) {
    std::ifstream in(sidecar_path);
    if (!in) throw std::runtime_error("cannot open sidecar " + sidecar_path);
    json j = json::parse(in);
    bundle.duration_s = j.value("duration_s", 0.0);
    bundle.stl_period_warning = j.value("stl_period_warning", false);
    if (j.contains("clocks"))
      for (auto& [id, c] : j["clocks"].items())
        bundle.clock_truth[id] = {c.value("skew", 0.0), c.value("offset_s", 0.0)};
    if (j.contains("exchanges"))
      for (auto& [id, e] : j["exchanges"].items())
        bundle.exchanges[id] = {e.value("t_con_tx", 0.0), e.value("t_dev_rx", 0.0),
                                e.value("t_dev_tx", 0.0), e.value("t_con_rx", 0.0)};
    if (j.contains("intervals"))
      for (auto& s : bundle.series)
        if (j["intervals"].contains(s.entity_id) &&
            j["intervals"][s.entity_id].contains(s.attribute))
          s.nominal_interval_s = j["intervals"][s.entity_id][s.attribute].get<double>();
  }
  return bundle;
}

}  // namespace hettwin
