#include "hettwin/valuation/valuation.hpp"

#include "hettwin/csv.hpp"
#include "hettwin/valuation/stats.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace hettwin {

Vector attribute_tick_series(const Simulator& sim, int user,
                             const std::string& attribute) {
  const auto& hist = sim.history();
  const Index t_count = static_cast<Index>(hist.size());
  Vector out(t_count);
  for (Index t = 0; t < t_count; ++t) {
    const auto& s = hist[t];
    if (attribute == kAttrThroughput) out[t] = s.achieved(user, 0);
    else if (attribute == kAttrDelay) out[t] = s.achieved(user, 1);
    else if (attribute == kAttrPacketLoss) out[t] = s.achieved(user, 2);
    else if (attribute == kAttrMobility) out[t] = s.user_speed_mps[user];
    else if (attribute == kAttrTrafficLoad) out[t] = s.demand_bps[user];
    else if (attribute == kAttrChannelQuality) {
      const int j = s.serving_bs(user);
      out[t] = j >= 0 ? linear_to_db(std::max(s.gain(user, j), 1e-30)) : -300.0;
    } else {
      throw std::invalid_argument("unknown attribute: " + attribute);
    }
  }
  return out;
}

std::vector<ModelingValue> evaluate_modeling_values(const Simulator& sim,
                                                    const ValuationConfig& cfg) {
  const int n = sim.scenario().num_users();
  const auto& hist = sim.history();
  const Index t_count = static_cast<Index>(hist.size());
  if (t_count < cfg.sampen.embedding_dim + 2)
    throw std::domain_error("evaluate_modeling_values: history too short");

  const std::vector<std::string> attrs = {kAttrThroughput, kAttrDelay,
                                          kAttrPacketLoss, kAttrTrafficLoad,
                                          kAttrMobility,   kAttrChannelQuality};

  std::vector<ModelingValue> out;
  out.reserve(static_cast<size_t>(n) * attrs.size());
  for (int i = 0; i < n; ++i) {
    // objective series: satisfaction ratio per metric over the window
    Matrix objectives(t_count, kNumQos);
    for (Index t = 0; t < t_count; ++t)
      for (int q = 0; q < kNumQos; ++q)
        objectives(t, q) = hist[t].satisfaction(i, q);

    Vector weights(kNumQos);
    for (int q = 0; q < kNumQos; ++q)
      weights[q] = sim.scenario().users[i].qos_weight[q];

    for (const auto& attr : attrs) {
      ModelingValue v;
      v.entity_id = user_entity_id(i);
      v.attribute = attr;
      const Vector x = attribute_tick_series(sim, i, attr);

      const double ent = sample_entropy(x, cfg.sampen);
      v.entropy = std::min(ent, kEntropyCap);

      v.per_objective = Vector::Zero(kNumQos);
      for (int q = 0; q < kNumQos; ++q) {
        const Vector obj = objectives.col(q);
        double rho = 0.0;
        bool defined = true;
        try {
          rho = pearson(x, obj);
        } catch (const std::domain_error&) {
          defined = false;  // flat series carries no linear signal
        }
        if (defined && std::abs(rho) < cfg.granger_trigger) {
          const double refined = granger_refine(rho, x, obj, cfg.granger_lag,
                                                cfg.granger_trigger, cfg.granger_floor,
                                                cfg.granger_alpha);
          if (refined != rho) v.granger_raised = true;
          rho = refined;
        }
        v.per_objective[q] = defined ? rho : 0.0;
      }
      v.benefit = aggregate_benefit(v.per_objective, weights);
      out.push_back(std::move(v));
    }
  }
  return out;
}

ClusterModel differentiate(std::vector<ModelingValue>& values,
                           const ValuationConfig& cfg) {
  const int k = cfg.kmeans_k;
  const Index n = static_cast<Index>(values.size());
  if (n < k) throw std::domain_error("differentiate: fewer points than levels");

  Matrix feats(n, 2);
  for (Index i = 0; i < n; ++i) {
    feats(i, 0) = values[i].entropy;
    feats(i, 1) = std::abs(values[i].benefit);
  }
  // standardize features
  Eigen::RowVector2d mu = feats.colwise().mean();
  Eigen::RowVector2d sd;
  for (int c = 0; c < 2; ++c) {
    const double var = (feats.col(c).array() - mu[c]).square().sum() / n;
    sd[c] = std::sqrt(var);
    if (sd[c] == 0.0) sd[c] = 1.0;
  }
  Matrix z = (feats.rowwise() - mu).array().rowwise() / sd.array();

  KMeansResult km = kmeans(z, k, cfg.seed, 100, cfg.kmeans_restarts);

  // rank clusters: score = |benefit| - entropy on standardized features,
  // highest score -> L1; ties prefer lower entropy
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = km.centroids(a, 1) - km.centroids(a, 0);
    const double sb = km.centroids(b, 1) - km.centroids(b, 0);
    if (sa != sb) return sa > sb;
    return km.centroids(a, 0) < km.centroids(b, 0);
  });

  ClusterModel model;
  model.centroids = km.centroids;
  model.cluster_of = km.assignment;
  model.iterations = km.iterations;
  model.level_of_cluster.assign(k, 0);
  for (int rank = 0; rank < k; ++rank) model.level_of_cluster[order[rank]] = rank + 1;
  for (Index i = 0; i < n; ++i)
    values[i].level = model.level_of_cluster[km.assignment[i]];
  return model;
}

void write_valuation_csv(const std::vector<ModelingValue>& values,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "entity_id,attribute,entropy,benefit,level\n";
  for (const auto& v : values)
    out << csv::join_row({v.entity_id, v.attribute, csv::num(v.entropy),
                          csv::num(v.benefit), "L" + std::to_string(v.level)});
}

}  // namespace hettwin
