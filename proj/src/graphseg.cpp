#include "hettwin/graphseg/graphseg.hpp"

#include "hettwin/valuation/kmeans.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace hettwin {

double traffic_volume(const std::vector<NetworkSnapshot>& history, int user, int bs,
                      int t_end) {
  if (t_end >= static_cast<int>(history.size()))
    throw std::domain_error("traffic_volume: t_end beyond trace horizon");
  double acc = 0.0;
  for (int t = 0; t <= t_end; ++t)
    if (history[t].assoc(user, bs)) acc += history[t].link_rate_bps(user, bs);
  return acc;
}

IntVector load_indicator(const LoadState& state) {
  const Index m = state.offered_bps.size();
  IntVector out(m);
  for (Index j = 0; j < m; ++j) {
    if (!(state.capacity_bps[j] > 0.0))
      throw std::domain_error("load_indicator: capacity must be positive");
    out[j] = state.offered_bps[j] >= state.zeta * state.capacity_bps[j] ? 1 : 0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// link demand model

LinkDemandModel LinkDemandModel::fit(const std::vector<NetworkSnapshot>& history,
                                     int lag, int window) {
  if (lag < 1) throw std::domain_error("LinkDemandModel: lag must be >= 1");
  const int t_count = static_cast<int>(history.size());
  if (t_count < 3 * lag + 1)
    throw std::domain_error("LinkDemandModel: need at least 3x lag samples");
  const int start = std::max(0, t_count - window);
  const int len = t_count - start;

  LinkDemandModel model;
  model.lag_ = lag;
  model.users_ = history.back().assoc.rows();
  model.bss_ = history.back().assoc.cols();
  model.coeffs_.resize(model.users_ * model.bss_);
  model.tails_.resize(model.users_ * model.bss_);

  Vector series(len);
  for (Index i = 0; i < model.users_; ++i) {
    for (Index j = 0; j < model.bss_; ++j) {
      for (int t = 0; t < len; ++t) {
        const auto& s = history[start + t];
        series[t] = s.assoc(i, j) ? s.demand_bps[i] : 0.0;
      }
      auto& tail = model.tails_[i * model.bss_ + j];
      tail = series.tail(lag);
      if (series.cwiseAbs().maxCoeff() == 0.0) continue;  // never-used link

      const int rows = len - lag;
      if (rows < 2 * lag + 2) continue;
      Matrix design(rows, lag + 1);
      Vector target(rows);
      for (int r = 0; r < rows; ++r) {
        design(r, 0) = 1.0;
        for (int l = 1; l <= lag; ++l) design(r, l) = series[r + lag - l];
        target[r] = series[r + lag];
      }
      model.coeffs_[i * model.bss_ + j] = design.colPivHouseholderQr().solve(target);
    }
  }
  return model;
}

Matrix LinkDemandModel::raw_prediction() const {
  Matrix out = Matrix::Zero(users_, bss_);
  for (Index i = 0; i < users_; ++i)
    for (Index j = 0; j < bss_; ++j) {
      const auto& c = coeffs_[i * bss_ + j];
      if (c.size() == 0) continue;
      const auto& tail = tails_[i * bss_ + j];
      double acc = c[0];
      for (int l = 1; l <= lag_; ++l) acc += c[l] * tail[lag_ - l];
      out(i, j) = acc;
    }
  return out;
}

Matrix LinkDemandModel::predict() const { return raw_prediction().cwiseMax(0.0); }

Vector LinkDemandModel::coefficients(int user, int bs) const {
  const auto& c = coeffs_[static_cast<Index>(user) * bss_ + bs];
  return c.size() ? c : Vector::Zero(lag_ + 1);
}

// ---------------------------------------------------------------------------
// activity graph

Matrix ActivityGraph::full() const {
  const Index n = num_users(), m = num_bs();
  Matrix w = Matrix::Zero(n + m, n + m);
  w.block(0, n, n, m) = adjacency;
  w.block(n, 0, m, n) = adjacency.transpose();
  return w;
}

ActivityGraph build_adjacency(const std::vector<NetworkSnapshot>& history,
                              const Eigen::MatrixXi& potential,
                              const LinkDemandModel& demand, double tau) {
  ActivityGraph g;
  g.potential = potential;
  g.tau = tau;
  const Matrix raw = demand.raw_prediction();

  double lo = kInf, hi = -kInf;
  for (Index i = 0; i < raw.rows(); ++i)
    for (Index j = 0; j < raw.cols(); ++j)
      if (potential(i, j)) {
        lo = std::min(lo, raw(i, j));
        hi = std::max(hi, raw(i, j));
      }

  g.adjacency = Matrix::Zero(raw.rows(), raw.cols());
  if (!(hi > -kInf)) {  // no present edges at all
    g.all_zero = true;
    return g;
  }
  const double span = hi - lo;
  for (Index i = 0; i < raw.rows(); ++i)
    for (Index j = 0; j < raw.cols(); ++j) {
      if (!potential(i, j)) continue;
      double v;
      if (span > 0.0)
        v = (raw(i, j) - lo) / span;
      else
        v = raw(i, j) > 0.0 ? 1.0 : 0.0;  // all equal: active edges saturate
      g.adjacency(i, j) = v;
    }
  g.all_zero = g.adjacency.cwiseAbs().maxCoeff() == 0.0;
  return g;
}

Matrix update_adjacency(const ActivityGraph& graph, const Vector& sat_ratio,
                        const IntVector& satisfied, const IntVector& loaded,
                        const Vector& offered_bps, const Vector& capacity_bps,
                        double zeta, double w) {
  const Index n = graph.num_users(), m = graph.num_bs();
  Matrix out = Matrix::Zero(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) {
      if (!graph.potential(i, j)) continue;
      double delta = 0.0;
      if (satisfied[i] * loaded[j] == 0) {
        const double load_slack = 1.0 - offered_bps[j] / (zeta * capacity_bps[j]);
        delta = std::max(sat_ratio[i], load_slack);
      }
      out(i, j) = (1.0 - w) * graph.adjacency(i, j) + w * delta;
    }
  return out;
}

// ---------------------------------------------------------------------------
// ratio-cut partitioning

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

std::vector<std::vector<int>> graph_components(const Matrix& w) {
  const int n = static_cast<int>(w.rows());
  UnionFind uf(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (w(i, j) > 0.0) uf.unite(i, j);
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

}  // namespace

double ratio_cut_objective(const Matrix& weights, const std::vector<int>& segment_of,
                           int num_segments) {
  const Index n = weights.rows();
  Vector vol = Vector::Zero(num_segments);
  Vector assoc = Vector::Zero(num_segments);
  const Vector degree = weights.rowwise().sum();
  for (Index i = 0; i < n; ++i) vol[segment_of[i]] += degree[i];
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (segment_of[i] == segment_of[j]) assoc[segment_of[i]] += weights(i, j);
  double obj = 0.0;
  for (int l = 0; l < num_segments; ++l)
    if (vol[l] > 0.0) obj += 1.0 - assoc[l] / vol[l];
  return obj;
}

PartitionResult ratio_cut_partition(const Matrix& weights, int num_segments,
                                    std::uint64_t seed) {
  const Index n = weights.rows();
  if (n < num_segments)
    throw std::domain_error("ratio_cut_partition: fewer vertices than segments");
  if (num_segments < 1)
    throw std::domain_error("ratio_cut_partition: need at least one segment");

  PartitionResult res;
  res.num_segments = num_segments;
  res.segment_of.assign(n, 0);
  if (num_segments == 1) return res;

  auto comps = graph_components(weights);
  if (static_cast<int>(comps.size()) > num_segments) {
    // more components than segments: merge the smallest ones together
    res.merged_components = true;
    std::sort(comps.begin(), comps.end(),
              [](const auto& a, const auto& b) { return a.size() > b.size(); });
    for (int c = 0; c < static_cast<int>(comps.size()); ++c) {
      const int label = std::min(c, num_segments - 1);
      for (int v : comps[c]) res.segment_of[v] = label;
    }
    return res;
  }

  // spectral embedding from the unnormalized Laplacian
  const Vector degree = weights.rowwise().sum();
  Matrix lap = Matrix(degree.asDiagonal()) - weights;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(lap);
  const Matrix embedding = eig.eigenvectors().leftCols(num_segments);

  KMeansResult km = kmeans(embedding, num_segments, seed, 100, 8);
  res.segment_of = km.assignment;

  // repair empty segments by stealing the worst-placed vertex from a large one
  std::vector<int> count(num_segments, 0);
  for (int s : res.segment_of) count[s]++;
  for (int s = 0; s < num_segments; ++s) {
    while (count[s] == 0) {
      Index worst = -1;
      double worst_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        if (count[res.segment_of[i]] <= 1) continue;
        const double d =
            (embedding.row(i) - km.centroids.row(res.segment_of[i])).squaredNorm();
        if (d > worst_d) {
          worst_d = d;
          worst = i;
        }
      }
      if (worst < 0) break;
      count[res.segment_of[worst]]--;
      res.segment_of[worst] = s;
      count[s]++;
    }
  }

  // single-vertex moves until locally optimal
  double obj = ratio_cut_objective(weights, res.segment_of, num_segments);
  bool improved = true;
  while (improved) {
    improved = false;
    for (Index v = 0; v < n; ++v) {
      const int cur = res.segment_of[v];
      if (count[cur] <= 1) continue;  // keep segments nonempty
      int best_seg = cur;
      double best_obj = obj;
      for (int s = 0; s < num_segments; ++s) {
        if (s == cur) continue;
        res.segment_of[v] = s;
        const double cand = ratio_cut_objective(weights, res.segment_of, num_segments);
        if (cand < best_obj - 1e-12) {
          best_obj = cand;
          best_seg = s;
        }
      }
      res.segment_of[v] = best_seg;
      if (best_seg != cur) {
        count[cur]--;
        count[best_seg]++;
        obj = best_obj;
        improved = true;
      }
    }
  }
  return res;
}

int eigengap_segment_count(const Matrix& weights, int max_segments) {
  const Index n = weights.rows();
  const Vector degree = weights.rowwise().sum();
  Matrix lap = Matrix(degree.asDiagonal()) - weights;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(lap);
  const Vector ev = eig.eigenvalues();
  const int cap = std::min<int>(max_segments, static_cast<int>(n) - 1);
  int best_k = 2;
  double best_gap = -1.0;
  for (int k = 2; k <= cap; ++k) {
    const double gap = ev[k] - ev[k - 1];
    if (gap > best_gap) {
      best_gap = gap;
      best_k = k;
    }
  }
  return best_k;
}

// ---------------------------------------------------------------------------
// target areas

std::vector<SegmentView> split_segments(const PartitionResult& partition,
                                        Index num_users, Index num_bs) {
  std::vector<SegmentView> out(partition.num_segments);
  for (Index v = 0; v < num_users + num_bs; ++v) {
    const int s = partition.segment_of[v];
    if (v < num_users)
      out[s].users.push_back(static_cast<int>(v));
    else
      out[s].bss.push_back(static_cast<int>(v - num_users));
  }
  return out;
}

namespace {

double user_benefit(int i, const Matrix& satisfaction, const Matrix& qos_weights) {
  double acc = 0.0;
  for (Index q = 0; q < satisfaction.cols(); ++q) {
    const double s = satisfaction(i, q);
    const double xi = s >= 1.0 ? 1.0 : 0.0;
    acc += qos_weights(i, q) * (1.0 - xi) * std::max(0.0, 1.0 - s);
  }
  return acc;
}

bool user_unsatisfied(int i, const Matrix& satisfaction) {
  for (Index q = 0; q < satisfaction.cols(); ++q)
    if (satisfaction(i, q) < 1.0) return true;
  return false;
}

}  // namespace

double area_efficiency(const std::vector<int>& users, const Matrix& satisfaction,
                       const Matrix& qos_weights, const Vector& user_cost) {
  double benefit = 0.0, cost = 0.0;
  for (int i : users) {
    benefit += user_benefit(i, satisfaction, qos_weights);
    cost += user_cost[i];
  }
  return cost > 0.0 ? benefit / cost : 0.0;
}

bool demand_supply_feasible(const std::vector<int>& users, const std::vector<int>& bss,
                            const SegmentView& segment, const Matrix& demand,
                            const Eigen::MatrixXi& potential,
                            const Vector& capacity_bps) {
  if (users.empty()) return true;
  if (bss.empty()) return false;
  double lhs = 0.0;
  for (int i : users)
    for (int j : segment.bss) lhs += demand(i, j);
  const double mz = static_cast<double>(bss.size());
  const double nz = static_cast<double>(users.size());
  double rhs = 0.0;
  for (int j : bss) {
    double reach = 0.0;
    for (int i : segment.users) reach += potential(i, j);
    rhs += capacity_bps[j] * reach / (mz * nz);
  }
  return lhs <= rhs;
}

TargetArea identify_target_area(const SegmentView& segment, const Matrix& satisfaction,
                                const Matrix& qos_weights, const Vector& user_cost,
                                const Matrix& demand, const Eigen::MatrixXi& potential,
                                const Vector& capacity_bps, const Matrix& adjacency,
                                const TargetAreaConfig& cfg) {
  TargetArea area;
  if (segment.users.empty()) return area;

  std::vector<int> unsat;
  for (int i : segment.users)
    if (user_unsatisfied(i, satisfaction)) unsat.push_back(i);
  if (unsat.empty()) return area;  // nothing to orchestrate here

  std::vector<int> users = segment.users;
  std::vector<int> bss = segment.bss;
  const bool seed_feasible =
      demand_supply_feasible(users, bss, segment, demand, potential, capacity_bps);

  auto covered = [&](const std::vector<int>& us, const std::vector<int>& bs_set) {
    for (int i : us) {
      if (!user_unsatisfied(i, satisfaction)) continue;
      bool ok = false;
      for (int j : bs_set)
        if (potential(i, j)) {
          ok = true;
          break;
        }
      if (!ok) return false;
    }
    return true;
  };

  // greedy drops: satisfied users and BSs covering nobody
  bool progress = true;
  while (progress) {
    progress = false;
    const double cur_eta = area_efficiency(users, satisfaction, qos_weights, user_cost);
    double best_eta = cur_eta;
    int best_user = -1, best_bs = -1;

    for (size_t k = 0; k < users.size(); ++k) {
      const int i = users[k];
      if (user_unsatisfied(i, satisfaction)) continue;  // never dropped
      std::vector<int> cand = users;
      cand.erase(cand.begin() + k);
      if (!covered(cand, bss)) continue;
      if (seed_feasible &&
          !demand_supply_feasible(cand, bss, segment, demand, potential, capacity_bps))
        continue;
      const double eta = area_efficiency(cand, satisfaction, qos_weights, user_cost);
      if (eta > best_eta + 1e-15) {
        best_eta = eta;
        best_user = static_cast<int>(k);
        best_bs = -1;
      }
    }
    for (size_t k = 0; k < bss.size(); ++k) {
      const int j = bss[k];
      bool isolated = true;
      for (int i : users)
        if (potential(i, j)) {
          isolated = false;
          break;
        }
      if (!isolated) continue;
      std::vector<int> cand = bss;
      cand.erase(cand.begin() + k);
      if (cand.empty() || !covered(users, cand)) continue;
      if (seed_feasible &&
          !demand_supply_feasible(users, cand, segment, demand, potential, capacity_bps))
        continue;
      // eta does not move with BS membership; drop isolated BSs once no user
      // drop improves further
      if (best_user < 0 && best_bs < 0) best_bs = static_cast<int>(k);
    }

    if (best_user >= 0) {
      users.erase(users.begin() + best_user);
      progress = true;
    } else if (best_bs >= 0) {
      bss.erase(bss.begin() + best_bs);
      progress = true;
    }
  }

  // pull strongly connected neighbors back in
  auto in_set = [](const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  for (int i : segment.users) {
    if (in_set(users, i)) continue;
    double strongest = 0.0;
    for (int j : bss) strongest = std::max(strongest, adjacency(i, j));
    if (strongest >= cfg.strong_edge_threshold) users.push_back(i);
  }
  for (int j : segment.bss) {
    if (in_set(bss, j)) continue;
    double strongest = 0.0;
    for (int i : users) strongest = std::max(strongest, adjacency(i, j));
    if (strongest >= cfg.strong_edge_threshold) bss.push_back(j);
  }
  std::sort(users.begin(), users.end());
  std::sort(bss.begin(), bss.end());

  area.users = std::move(users);
  area.bss = std::move(bss);
  area.benefit_sum = 0.0;
  area.cost_sum = 0.0;
  for (int i : area.users) {
    area.benefit_sum += user_benefit(i, satisfaction, qos_weights);
    area.cost_sum += user_cost[i];
  }
  area.eta = area_efficiency(area.users, satisfaction, qos_weights, user_cost);
  area.feasible = demand_supply_feasible(area.users, area.bss, segment, demand,
                                         potential, capacity_bps);
  return area;
}

}  // namespace hettwin
