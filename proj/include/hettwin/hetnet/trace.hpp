#pragma once

#include "hettwin/hetnet/simulator.hpp"
#include "hettwin/series.hpp"

#include <map>
#include <string>
#include <vector>

namespace hettwin {

/// Ground-truth clock parameters of one device. Kept apart from the corrupted
/// timestamps so synchronization tests have an oracle.
struct DeviceClockTruth {
  double skew = 0.0;      // dimensionless (50 ppm -> 5e-5)
  double offset_s = 0.0;  // device clock minus reference at t = 0
};

/// One two-way timestamped packet exchange (PTP style). Control-side stamps
/// are in reference time, device-side stamps in the device's corrupted clock.
struct ExchangeRecord {
  double t_con_tx = 0.0;  // control transmits
  double t_dev_rx = 0.0;  // device receives (device clock)
  double t_dev_tx = 0.0;  // device replies (device clock)
  double t_con_rx = 0.0;  // control receives
};

/// Synthetic trace of the network: one AttributeSeries per (entity, attribute)
/// with device-local timestamps, plus the ground truth needed by tests.
struct TraceBundle {
  std::vector<AttributeSeries> series;
  std::map<std::string, DeviceClockTruth> clock_truth;  // per entity
  std::map<std::string, ExchangeRecord> exchanges;      // per entity
  double duration_s = 0.0;
  bool stl_period_warning = false;  // duration below the largest requested period

  const AttributeSeries* find(const std::string& entity,
                              const std::string& attribute) const;
};

inline std::string user_entity_id(int user) { return "ue" + std::to_string(user); }
inline std::string bs_entity_id(int bs) { return "bs" + std::to_string(bs); }

constexpr const char* kAttrThroughput = "throughput";
constexpr const char* kAttrDelay = "delay";
constexpr const char* kAttrTrafficLoad = "traffic_load";
constexpr const char* kAttrPacketLoss = "packet_loss";
constexpr const char* kAttrMobility = "mobility";
constexpr const char* kAttrChannelQuality = "channel_quality";

/// The six trace attributes with the level each one typically lands in.
std::vector<std::pair<std::string, std::string>> default_attribute_levels();

/// Runs the simulator for `duration_h` ticks (reusing any existing history)
/// and samples every attribute series with per-device cadences, injected
/// clock errors, and optional missing samples.
TraceBundle generate_trace(Simulator& sim, double duration_h,
                           const ClockCorruption& corruption,
                           const std::vector<double>& stl_periods_h = {24.0});

/// CSV with header entity_id,attribute,timestamp_s,value.
void write_trace_csv(const TraceBundle& bundle, const std::string& path);
/// JSON sidecar holding ground-truth clock parameters and exchange records.
void write_clock_sidecar(const TraceBundle& bundle, const std::string& path);

TraceBundle read_trace_csv(const std::string& csv_path,
                           const std::string& sidecar_path = "");

}  // namespace hettwin
