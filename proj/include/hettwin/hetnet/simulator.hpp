#pragma once

#include "hettwin/hetnet/channel.hpp"
#include "hettwin/hetnet/scenario.hpp"
#include "hettwin/rng.hpp"
#include "hettwin/types.hpp"

#include <optional>
#include <vector>

namespace hettwin {

/// Immutable state of the network at one tick (1 tick = 1 simulated hour).
struct NetworkSnapshot {
  int tick = 0;
  Matrix gain;                  // N x M, linear |h|^2 incl. path loss/shadow/fading
  Eigen::MatrixXi assoc;        // N x M, a_{i,j}
  Matrix power_w;               // N x M, p_{i,j} in watts, 0 off-association
  Matrix achieved;              // N x kNumQos raw metric values
  Matrix satisfaction;          // N x kNumQos S ratios
  Vector demand_bps;            // per user
  Vector bs_load_bps;           // per BS offered traffic
  Vector user_speed_mps;        // per user
  Matrix user_pos;              // N x 2
  Matrix link_rate_bps;         // N x M rate each user would see on its serving link
                                //   (nonzero only where assoc = 1)

  int serving_bs(int user) const {
    for (int j = 0; j < assoc.cols(); ++j)
      if (assoc(user, j)) return j;
    return -1;
  }
};

/// SINR of an active link in a snapshot. Interference is the total transmit
/// power of every other BS seen through that user's channel.
double snapshot_sinr(const NetworkSnapshot& snap, int user, int bs, double noise_w);

/// One {user, bs, power} pin applied by orchestration; stays active until
/// replaced. Power in watts.
struct PinnedLink {
  int user = -1;
  int bs = -1;
  double power_w = 0.0;
};

/// Violation report for the association/power constraints C1-C5.
struct ConstraintReport {
  bool ok = true;
  std::string detail;
};

ConstraintReport check_constraints(const NetworkSnapshot& snap, const Scenario& sc);

/// Deterministic discrete-time HetNet simulator. Single-writer: step()
/// mutates the instance; emitted snapshots are immutable values.
class Simulator {
 public:
  explicit Simulator(Scenario scenario);

  /// Advances one tick and returns the new snapshot. Deterministic under a
  /// fixed (seed, scenario) pair regardless of wall-clock or call site.
  const NetworkSnapshot& step();

  /// Runs until `ticks` snapshots exist.
  void run_to(int ticks);

  /// Pins association + power for the given links (validated against C1-C5
  /// before acceptance). Unpinned users keep the default best-gain policy and
  /// share each BS's remaining power budget equally.
  void apply_policy(const std::vector<PinnedLink>& pins);
  void clear_policy();

  const Scenario& scenario() const { return scenario_; }
  const std::vector<NetworkSnapshot>& history() const { return history_; }
  const NetworkSnapshot& latest() const { return history_.back(); }
  int ticks() const { return static_cast<int>(history_.size()); }

  /// Potential-link matrix X: 1 iff the user sits within coverage radius.
  Eigen::MatrixXi potential_links() const;

  /// Demand a user generates at tick t (before noise), exposed for oracles.
  double seasonal_demand(int user, int t) const;

 private:
  void advance_positions();
  Matrix draw_gains(int tick) const;
  Vector draw_demand(int tick);
  void compute_qos(NetworkSnapshot& snap) const;

  Scenario scenario_;
  Rng rng_;
  std::vector<NetworkSnapshot> history_;
  std::vector<std::optional<PinnedLink>> pins_;  // per user
  int next_tick_ = 0;
  std::vector<std::mt19937_64> waypoint_streams_;
};

}  // namespace hettwin
