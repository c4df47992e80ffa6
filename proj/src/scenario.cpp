#include "hettwin/hetnet/scenario.hpp"

#include <cmath>
#include <random>

namespace hettwin {

namespace {

// Capacity defaults: macro cells carry more backhaul than small cells.
constexpr double kDefaultMacroCapacity = 80e6;
constexpr double kDefaultSmallCapacity = 30e6;

}  // namespace

Scenario Scenario::from_config(const Config& cfg) {
  Scenario sc;
  sc.seed = static_cast<std::uint64_t>(cfg.num_or("network", "seed", 1));
  sc.arena_m = cfg.num_or("network", "arena_m", 600.0);

  sc.channel.bandwidth_hz = cfg.num_or("channel", "bandwidth_hz", 20e6);
  sc.channel.noise_dbm = cfg.num_or("channel", "noise_dbm", -104.0);
  sc.channel.noise_figure_db = cfg.num_or("channel", "noise_figure_db", 5.0);
  sc.channel.shadowing_db = cfg.num_or("channel", "shadowing_db", 8.0);

  sc.path_loss.macro_a = cfg.num_or("pathloss", "macro_a", 15.3);
  sc.path_loss.macro_b = cfg.num_or("pathloss", "macro_b", 37.6);
  sc.path_loss.small_a = cfg.num_or("pathloss", "small_a", 8.46);
  sc.path_loss.small_b = cfg.num_or("pathloss", "small_b", 20.0);
  sc.path_loss.small_c = cfg.num_or("pathloss", "small_c", 0.7);

  sc.mobility.speed_min = cfg.num_or("mobility", "speed_min", 0.0);
  sc.mobility.speed_max = cfg.num_or("mobility", "speed_max", 1.5);

  sc.clock.skew_ppm_max = cfg.num_or("clock", "skew_ppm_max", 0.0);
  sc.clock.offset_s_max = cfg.num_or("clock", "offset_s_max", 0.0);
  sc.clock.exchange_jitter_s = cfg.num_or("clock", "jitter_s", 0.0);

  sc.trace.duration_h = cfg.num_or("trace", "duration_h", 480.0);
  sc.trace.interval_min_s = cfg.num_or("trace", "interval_min_s", 1800.0);
  sc.trace.interval_max_s = cfg.num_or("trace", "interval_max_s", 3600.0);
  sc.trace.missing_rate = cfg.num_or("trace", "missing_rate", 0.0);

  sc.delay_model.packet_bits = cfg.num_or("qos", "packet_bits", 12000.0);
  sc.delay_model.max_delay_s = cfg.num_or("qos", "max_delay_s", 0.5);
  sc.delay_model.loss_scale = cfg.num_or("qos", "loss_scale", 1.0);

  const int macro_n = static_cast<int>(cfg.num_or("network", "macro_bs", 2));
  const int small_n = static_cast<int>(cfg.num_or("network", "small_bs", 6));
  const int users_n = static_cast<int>(cfg.num_or("network", "users", 25));

  Rng rng(sc.seed);

  // macro BSs on a coarse grid, small BSs scattered; both deterministic
  auto bs_stream = rng.stream("bs_layout");
  std::uniform_real_distribution<double> uni(0.0, sc.arena_m);
  const double macro_power = cfg.num_or("macro", "power_dbm", 40.0);
  const double macro_radius = cfg.num_or("macro", "radius_m", 300.0);
  const double macro_cap = cfg.num_or("macro", "capacity_bps", kDefaultMacroCapacity);
  const int grid = std::max(1, static_cast<int>(std::ceil(std::sqrt(double(macro_n)))));
  for (int k = 0; k < macro_n; ++k) {
    BaseStation bs;
    bs.id = k;
    bs.tier = Tier::kMacro;
    const int gx = k % grid, gy = k / grid;
    bs.position = {sc.arena_m * (gx + 0.5) / grid, sc.arena_m * (gy + 0.5) / grid};
    bs.max_power_dbm = macro_power;
    bs.coverage_radius_m = macro_radius;
    bs.capacity_bps = macro_cap;
    sc.base_stations.push_back(bs);
  }
  const double small_power = cfg.num_or("small", "power_dbm", 17.0);
  const double small_radius = cfg.num_or("small", "radius_m", 50.0);
  const double small_cap = cfg.num_or("small", "capacity_bps", kDefaultSmallCapacity);
  for (int k = 0; k < small_n; ++k) {
    BaseStation bs;
    bs.id = macro_n + k;
    bs.tier = Tier::kSmall;
    bs.position = {uni(bs_stream), uni(bs_stream)};
    bs.max_power_dbm = small_power;
    bs.coverage_radius_m = small_radius;
    bs.capacity_bps = small_cap;
    sc.base_stations.push_back(bs);
  }

  // users cluster around hotspots to mimic malls/offices
  auto user_stream = rng.stream("user_layout");
  const int hotspots = std::max(1, static_cast<int>(cfg.num_or("network", "hotspots", 3)));
  std::vector<Eigen::Vector2d> centers;
  for (int h = 0; h < hotspots; ++h)
    centers.push_back({uni(user_stream), uni(user_stream)});
  std::normal_distribution<double> spread(0.0, cfg.num_or("network", "hotspot_sigma_m", 60.0));
  std::uniform_int_distribution<int> pick(0, hotspots - 1);

  const double req_thr = cfg.num_or("qos", "throughput_bps", 5e6);
  const double req_delay = cfg.num_or("qos", "delay_s", 0.05);
  const double req_loss = cfg.num_or("qos", "loss_rate", 0.02);
  const double w_thr = cfg.num_or("qos", "w_throughput", 0.5);
  const double w_delay = cfg.num_or("qos", "w_delay", 0.3);
  const double w_loss = cfg.num_or("qos", "w_loss", 0.2);
  const double req_spread = cfg.num_or("qos", "requirement_spread", 0.3);

  const double base_rate = cfg.num_or("traffic", "base_rate_bps", 4e6);
  const double daily_amp = cfg.num_or("traffic", "daily_amp", 0.5);
  const double weekly_amp = cfg.num_or("traffic", "weekly_amp", 0.0);
  const double noise_frac = cfg.num_or("traffic", "noise_frac", 0.05);
  const double rate_spread = cfg.num_or("traffic", "rate_spread", 0.5);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < users_n; ++i) {
    UserEquipment u;
    u.id = i;
    const auto& c = centers[pick(user_stream)];
    u.position = {std::clamp(c.x() + spread(user_stream), 0.0, sc.arena_m),
                  std::clamp(c.y() + spread(user_stream), 0.0, sc.arena_m)};
    const double q = 1.0 + req_spread * (2.0 * unit(user_stream) - 1.0);
    u.qos_required = {req_thr * q, req_delay / q, req_loss / q};
    const double wsum = w_thr + w_delay + w_loss;
    u.qos_weight = {w_thr / wsum, w_delay / wsum, w_loss / wsum};
    u.base_rate_bps = base_rate * (1.0 + rate_spread * (2.0 * unit(user_stream) - 1.0));
    u.daily_amp = daily_amp;
    u.weekly_amp = weekly_amp;
    u.noise_frac = noise_frac;
    sc.users.push_back(u);
  }
  return sc;
}

std::vector<std::string> validate_scenario_config(const Config& cfg) {
  std::vector<std::string> issues;
  auto complain = [&](const std::string& section, const std::string& key,
                      const std::string& msg) {
    issues.push_back("line " + std::to_string(cfg.line_of(section, key)) + ": " +
                     section + "." + key + ": " + msg);
  };
  auto positive = [&](const std::string& s, const std::string& k, double fallback) {
    double v = 0;
    try {
      v = cfg.num_or(s, k, fallback);
    } catch (const ConfigError& e) {
      issues.push_back(e.what());
      return;
    }
    if (!(v > 0.0)) complain(s, k, "must be positive (got " + std::to_string(v) + ")");
  };

  positive("network", "users", 25);
  positive("network", "arena_m", 600);
  positive("channel", "bandwidth_hz", 20e6);
  positive("qos", "throughput_bps", 5e6);
  positive("qos", "delay_s", 0.05);
  positive("qos", "loss_rate", 0.02);
  positive("trace", "duration_h", 480);
  positive("macro", "capacity_bps", kDefaultMacroCapacity);
  positive("small", "capacity_bps", kDefaultSmallCapacity);

  const int nbs = static_cast<int>(cfg.num_or("network", "macro_bs", 2)) +
                  static_cast<int>(cfg.num_or("network", "small_bs", 6));
  if (nbs < 1) complain("network", "macro_bs", "need at least one base station");

  const double wsum = cfg.num_or("qos", "w_throughput", 0.5) +
                      cfg.num_or("qos", "w_delay", 0.3) +
                      cfg.num_or("qos", "w_loss", 0.2);
  if (wsum <= 0.0) complain("qos", "w_throughput", "QoS weights must sum to > 0");

  // cross-field: STL periods must fit in the trace
  const double duration = cfg.num_or("trace", "duration_h", 480.0);
  for (double p : cfg.array_or("pipeline", "stl_periods", {24.0})) {
    if (p <= 1.0) complain("pipeline", "stl_periods", "period must exceed 1 hour");
    if (duration < 2.0 * p)
      complain("pipeline", "stl_periods",
               "trace.duration_h = " + std::to_string(duration) +
                   " is shorter than twice the STL period " + std::to_string(p));
  }
  const double weekly = cfg.num_or("traffic", "weekly_amp", 0.0);
  if (weekly > 0.0 && duration < 336.0)
    complain("traffic", "weekly_amp",
             "weekly seasonality needs trace.duration_h >= 336 (two weekly periods)");

  if (cfg.num_or("trace", "interval_min_s", 1800) >
      cfg.num_or("trace", "interval_max_s", 3600))
    complain("trace", "interval_min_s", "interval_min_s exceeds interval_max_s");

  return issues;
}

}  // namespace hettwin
