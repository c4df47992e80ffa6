#pragma once

#include "hettwin/config.hpp"
#include "hettwin/rng.hpp"
#include "hettwin/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace hettwin {

enum class Tier { kMacro, kSmall };

/// QoS metric set. Delay and loss are "smaller is better" and their
/// satisfaction ratio is computed as required/achieved (see qos_satisfaction).
enum class QosMetric { kThroughput = 0, kDelay = 1, kLoss = 2 };
constexpr int kNumQos = 3;
constexpr std::array<QosMetric, kNumQos> kQosMetrics = {
    QosMetric::kThroughput, QosMetric::kDelay, QosMetric::kLoss};

inline const char* qos_name(QosMetric m) {
  switch (m) {
    case QosMetric::kThroughput: return "throughput";
    case QosMetric::kDelay: return "delay";
    case QosMetric::kLoss: return "loss";
  }
  return "?";
}

struct BaseStation {
  int id = 0;
  Tier tier = Tier::kMacro;
  Eigen::Vector2d position{0, 0};    // m
  double max_power_dbm = 40.0;       // P_max
  double coverage_radius_m = 300.0;
  double capacity_bps = 0.0;         // theoretical capacity S_j
};

struct UserEquipment {
  int id = 0;
  Eigen::Vector2d position{0, 0};
  Eigen::Vector2d waypoint{0, 0};
  double speed_mps = 0.0;
  std::array<double, kNumQos> qos_required{};  // Q_hat per metric
  std::array<double, kNumQos> qos_weight{};    // omega, sums to 1
  // demand profile
  double base_rate_bps = 0.0;
  double daily_amp = 0.0;
  double weekly_amp = 0.0;
  double noise_frac = 0.0;
};

struct ChannelModel {
  double bandwidth_hz = 20e6;
  double noise_dbm = -104.0;
  double noise_figure_db = 5.0;
  double shadowing_db = 8.0;

  /// Total noise power (thermal + figure), linear watts.
  double noise_watt() const { return dbm_to_watt(noise_dbm + noise_figure_db); }
};

struct PathLossParams {
  double macro_a = 15.3, macro_b = 37.6;
  double small_a = 8.46, small_b = 20.0, small_c = 0.7;
};

struct MobilityParams {
  double speed_min = 0.0, speed_max = 1.5;  // m/s, random waypoint
};

struct ClockCorruption {
  double skew_ppm_max = 0.0;   // per-device skew drawn from +-max
  double offset_s_max = 0.0;   // per-device offset drawn from +-max
  double exchange_jitter_s = 0.0;
};

struct TraceParams {
  double duration_h = 480;
  double interval_min_s = 1800;  // per-device nominal sampling interval range
  double interval_max_s = 3600;
  double missing_rate = 0.0;
};

struct DelayModelParams {
  double packet_bits = 12000.0;
  double max_delay_s = 0.5;
  double loss_scale = 1.0;
};

/// Full scenario: topology, channel, traffic, QoS defaults cloned per user.
struct Scenario {
  std::vector<BaseStation> base_stations;
  std::vector<UserEquipment> users;
  ChannelModel channel;
  PathLossParams path_loss;
  MobilityParams mobility;
  ClockCorruption clock;
  TraceParams trace;
  DelayModelParams delay_model;
  double arena_m = 600.0;
  std::uint64_t seed = 1;

  int num_bs() const { return static_cast<int>(base_stations.size()); }
  int num_users() const { return static_cast<int>(users.size()); }

  /// Builds a scenario from a parsed config. Positions, QoS requirements and
  /// demand profiles are drawn deterministically from the scenario seed.
  static Scenario from_config(const Config& cfg);
};

/// Schema and cross-field validation without running. Returns human-readable
/// diagnostics (empty when valid), one "line:field: message" entry each.
std::vector<std::string> validate_scenario_config(const Config& cfg);

}  // namespace hettwin
