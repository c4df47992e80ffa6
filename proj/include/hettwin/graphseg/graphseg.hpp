#pragma once

#include "hettwin/hetnet/simulator.hpp"
#include "hettwin/types.hpp"

#include <string>
#include <vector>

namespace hettwin {

/// Cumulative traffic volume of one link: sum over ticks 0..T of a * r.
double traffic_volume(const std::vector<NetworkSnapshot>& history, int user, int bs,
                      int t_end);

/// Binary load indicator per Eq.-(14) semantics: 1 iff offered >= zeta * capacity.
struct LoadState {
  Vector offered_bps;   // per BS
  Vector capacity_bps;  // S_j
  double zeta = 0.8;
};

IntVector load_indicator(const LoadState& state);

/// Per-link AR model of offered link traffic, used both as the HDT "coarse
/// twin" of user demand and as the edge weight source for the activity graph.
class LinkDemandModel {
 public:
  /// Fits AR(lag) by least squares per link on the last `window` ticks of
  /// associated demand. Links with all-zero history get a null model.
  static LinkDemandModel fit(const std::vector<NetworkSnapshot>& history, int lag = 2,
                             int window = 168);

  /// One-step-ahead predicted demand D_{i,j}, bits/s, clamped at zero.
  Matrix predict() const;

  /// Raw AR combination (coefficients times lagged values, no clamping);
  /// the adjacency builder normalizes this.
  Matrix raw_prediction() const;

  Vector coefficients(int user, int bs) const;  // [intercept, phi_1..phi_lag]
  int lag() const { return lag_; }

 private:
  int lag_ = 2;
  Index users_ = 0, bss_ = 0;
  std::vector<Vector> coeffs_;  // per link, empty when null
  std::vector<Vector> tails_;   // last `lag` samples per link
};

/// User-BS activity graph at one evaluation instant. Vertices are the users
/// followed by the BSs; the adjacency lives on the bipartite block.
struct ActivityGraph {
  Eigen::MatrixXi potential;  // X, users x BSs
  Matrix adjacency;           // users x BSs, in [0, 1]
  double tau = 0.0;
  bool all_zero = false;

  Index num_users() const { return adjacency.rows(); }
  Index num_bs() const { return adjacency.cols(); }

  /// Symmetric (N+M) x (N+M) embedding for partitioning.
  Matrix full() const;
};

/// Eq.-(17) style adjacency: potential mask times the min-max normalized AR
/// prediction of link traffic. A graph with no traffic anywhere comes back
/// all-zero with `all_zero` set.
ActivityGraph build_adjacency(const std::vector<NetworkSnapshot>& history,
                              const Eigen::MatrixXi& potential,
                              const LinkDemandModel& demand, double tau);

/// Smoothed situation update: (1-w) * prior + w * delta, where delta favors
/// unsatisfied users and underloaded BSs and zeroes satisfied-user/loaded-BS
/// edges. `sat_ratio` is the binding (minimum) satisfaction ratio per user.
Matrix update_adjacency(const ActivityGraph& graph, const Vector& sat_ratio,
                        const IntVector& satisfied, const IntVector& loaded,
                        const Vector& offered_bps, const Vector& capacity_bps,
                        double zeta, double w);

struct PartitionResult {
  std::vector<int> segment_of;  // per vertex
  int num_segments = 0;
  bool merged_components = false;  // more components than segments: merged by size
};

/// Ratio-cut objective (Eq. 15): sum over segments of cut(U, V\U) / vol(U),
/// with zero-volume segments contributing nothing.
double ratio_cut_objective(const Matrix& weights, const std::vector<int>& segment_of,
                           int num_segments);

/// Spectral partition: unnormalized Laplacian, smallest-eigenvalue
/// eigenvectors, K-means on the embedding rows, then single-vertex moves
/// until the objective is locally optimal.
PartitionResult ratio_cut_partition(const Matrix& weights, int num_segments,
                                    std::uint64_t seed);

/// Eigengap heuristic for the segment count in [2, max_segments].
int eigengap_segment_count(const Matrix& weights, int max_segments);

// ---------------------------------------------------------------------------
// target areas

struct SegmentView {
  std::vector<int> users;  // global indices
  std::vector<int> bss;
};

/// Splits a partition of the bipartite embedding back into per-segment views.
std::vector<SegmentView> split_segments(const PartitionResult& partition,
                                        Index num_users, Index num_bs);

struct TargetAreaConfig {
  double zeta = 0.8;
  double strong_edge_threshold = 0.5;
};

struct TargetArea {
  std::vector<int> users;
  std::vector<int> bss;
  double eta = 0.0;
  double benefit_sum = 0.0;
  double cost_sum = 0.0;
  bool feasible = true;
  bool empty() const { return users.empty(); }
};

/// Greedy efficiency maximization inside one segment: seed with every segment
/// member, drop satisfied users (and BSs serving nobody) while the ratio
/// improves and the demand-supply bound stays satisfiable, keep every
/// unsatisfied user covered, then pull back neighbors whose adjacency edge to
/// the area is strong.
TargetArea identify_target_area(const SegmentView& segment, const Matrix& satisfaction,
                                const Matrix& qos_weights, const Vector& user_cost,
                                const Matrix& demand, const Eigen::MatrixXi& potential,
                                const Vector& capacity_bps, const Matrix& adjacency,
                                const TargetAreaConfig& cfg);

/// Recomputed-from-scratch efficiency of a chosen member set (test oracle
/// support and the invariant check path).
double area_efficiency(const std::vector<int>& users, const Matrix& satisfaction,
                       const Matrix& qos_weights, const Vector& user_cost);

/// Literal demand-supply feasibility bound for a candidate member set.
bool demand_supply_feasible(const std::vector<int>& users, const std::vector<int>& bss,
                            const SegmentView& segment, const Matrix& demand,
                            const Eigen::MatrixXi& potential, const Vector& capacity_bps);

}  // namespace hettwin
