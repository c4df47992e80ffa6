#pragma once

#include "hettwin/hetnet/simulator.hpp"
#include "hettwin/hetnet/trace.hpp"
#include "hettwin/valuation/kmeans.hpp"
#include "hettwin/valuation/sample_entropy.hpp"

#include <string>
#include <vector>

namespace hettwin {

/// Modeling value of one (entity, attribute): cost as sample entropy,
/// benefit as weighted correlation against the QoS objectives, and the level
/// assigned after clustering. Levels: 0 unassigned, 1..4 -> L1..L4.
struct ModelingValue {
  std::string entity_id;
  std::string attribute;
  double entropy = 0.0;
  Vector per_objective;       // rho per QoS metric, refined
  double benefit = 0.0;       // weighted aggregate, signed
  int level = 0;
  bool granger_raised = false;
};

struct ValuationConfig {
  SampEnConfig sampen;
  int granger_lag = 3;
  double granger_trigger = 0.3;
  double granger_floor = 0.3;
  double granger_alpha = 0.05;
  int kmeans_k = 4;
  int kmeans_restarts = 8;
  std::uint64_t seed = 1;
};

struct ClusterModel {
  Matrix centroids;                // k x 2 in standardized (entropy, |benefit|)
  std::vector<int> cluster_of;     // per value index
  std::vector<int> level_of_cluster;  // cluster -> 1..4
  int iterations = 0;
};

/// Entropy capped to this when a series yields +inf (no template matches);
/// keeps the clustering feature space finite.
constexpr double kEntropyCap = 8.0;

/// Scores every (user, attribute) series in the tick history: sample-entropy
/// cost, per-objective Pearson benefit with Granger refinement below the
/// trigger, aggregated with the user's QoS weights.
std::vector<ModelingValue> evaluate_modeling_values(const Simulator& sim,
                                                    const ValuationConfig& cfg);

/// K-means differentiation in standardized (entropy, |benefit|) space.
/// Clusters are ranked into L1..L4 by centroid score |benefit| - entropy,
/// descending; ties prefer the lower-entropy cluster. Writes levels back.
ClusterModel differentiate(std::vector<ModelingValue>& values,
                           const ValuationConfig& cfg);

/// Report CSV: entity_id,attribute,entropy,benefit,level.
void write_valuation_csv(const std::vector<ModelingValue>& values,
                         const std::string& path);

/// Tick-aligned value series of one attribute for one user, taken from the
/// simulator history (the HDT view; no clock corruption).
Vector attribute_tick_series(const Simulator& sim, int user,
                             const std::string& attribute);

}  // namespace hettwin
