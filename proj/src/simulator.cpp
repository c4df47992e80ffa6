#include "hettwin/hetnet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hettwin {

namespace {
constexpr double kTickSeconds = 3600.0;
}

double snapshot_sinr(const NetworkSnapshot& snap, int user, int bs, double noise_w) {
  if (snap.assoc(user, bs) != 1)
    throw std::logic_error("snapshot_sinr: no active association for this link");
  const double signal = snap.power_w(user, bs) * snap.gain(user, bs);
  double interference = 0.0;
  for (int l = 0; l < snap.assoc.cols(); ++l) {
    if (l == bs) continue;
    const double tx = snap.power_w.col(l).sum();  // total transmit power of BS l
    interference += tx * snap.gain(user, l);
  }
  return sinr_linear(signal, interference, noise_w);
}

ConstraintReport check_constraints(const NetworkSnapshot& snap, const Scenario& sc) {
  const int n = sc.num_users();
  const int m = sc.num_bs();
  for (int i = 0; i < n; ++i) {
    int count = 0;
    for (int j = 0; j < m; ++j) {
      const int a = snap.assoc(i, j);
      if (a != 0 && a != 1) return {false, "C1: non-binary association"};
      count += a;
      if (snap.power_w(i, j) < 0.0) return {false, "C4: negative power"};
    }
    if (count > 1)
      return {false, "C2: user " + std::to_string(i) + " has multiple associations"};
  }
  for (int j = 0; j < m; ++j) {
    double used = 0.0;
    for (int i = 0; i < n; ++i)
      if (snap.assoc(i, j)) used += snap.power_w(i, j);
    const double budget = dbm_to_watt(sc.base_stations[j].max_power_dbm);
    if (used > budget * (1.0 + 1e-9))
      return {false, "C5: BS " + std::to_string(j) + " exceeds power budget"};
  }
  return {};
}

Simulator::Simulator(Scenario scenario)
    : scenario_(std::move(scenario)), rng_(scenario_.seed) {
  const int n = scenario_.num_users();
  pins_.assign(n, std::nullopt);
  waypoint_streams_.reserve(n);
  for (int i = 0; i < n; ++i)
    waypoint_streams_.push_back(rng_.stream("waypoint", i));
  // initial waypoints/speeds
  for (int i = 0; i < n; ++i) {
    auto& u = scenario_.users[i];
    std::uniform_real_distribution<double> pos(0.0, scenario_.arena_m);
    std::uniform_real_distribution<double> spd(scenario_.mobility.speed_min,
                                               scenario_.mobility.speed_max);
    u.waypoint = {pos(waypoint_streams_[i]), pos(waypoint_streams_[i])};
    u.speed_mps = spd(waypoint_streams_[i]);
  }
}

void Simulator::advance_positions() {
  for (int i = 0; i < scenario_.num_users(); ++i) {
    auto& u = scenario_.users[i];
    double travel = u.speed_mps * kTickSeconds;
    while (travel > 0.0) {
      const Eigen::Vector2d delta = u.waypoint - u.position;
      const double dist = delta.norm();
      if (dist <= travel) {
        u.position = u.waypoint;
        travel -= dist;
        std::uniform_real_distribution<double> pos(0.0, scenario_.arena_m);
        std::uniform_real_distribution<double> spd(scenario_.mobility.speed_min,
                                                   scenario_.mobility.speed_max);
        u.waypoint = {pos(waypoint_streams_[i]), pos(waypoint_streams_[i])};
        u.speed_mps = spd(waypoint_streams_[i]);
        if (u.speed_mps <= 0.0) break;  // parked user
      } else {
        u.position += delta * (travel / dist);
        travel = 0.0;
      }
    }
  }
}

Matrix Simulator::draw_gains(int tick) const {
  const int n = scenario_.num_users();
  const int m = scenario_.num_bs();
  Matrix gain(n, m);
  auto stream = rng_.stream("channel", static_cast<std::uint64_t>(tick));
  std::normal_distribution<double> shadow(0.0, scenario_.channel.shadowing_db);
  std::exponential_distribution<double> rayleigh_power(1.0);  // |h|^2, unit mean
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const auto& bs = scenario_.base_stations[j];
      const double d = std::max((scenario_.users[i].position - bs.position).norm(), 1.0);
      const double pl = path_loss_db(bs.tier, d, scenario_.path_loss);
      const double sh = scenario_.channel.shadowing_db > 0.0 ? shadow(stream) : 0.0;
      const double fading = rayleigh_power(stream);
      gain(i, j) = db_to_linear(-pl + sh) * fading;
    }
  }
  return gain;
}

double Simulator::seasonal_demand(int user, int t) const {
  const auto& u = scenario_.users[user];
  const double daily = u.daily_amp * std::sin(2.0 * std::numbers::pi * t / 24.0);
  const double weekly = u.weekly_amp * std::sin(2.0 * std::numbers::pi * t / 168.0);
  return u.base_rate_bps * (1.0 + daily + weekly);
}

Vector Simulator::draw_demand(int tick) {
  const int n = scenario_.num_users();
  Vector demand(n);
  auto stream = rng_.stream("demand", static_cast<std::uint64_t>(tick));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const auto& u = scenario_.users[i];
    double d = seasonal_demand(i, tick);
    if (u.noise_frac > 0.0) d += u.base_rate_bps * u.noise_frac * noise(stream);
    demand[i] = std::max(d, 0.0);
  }
  return demand;
}

void Simulator::compute_qos(NetworkSnapshot& snap) const {
  const int n = scenario_.num_users();
  const double noise_w = scenario_.channel.noise_watt();
  const auto& dm = scenario_.delay_model;
  snap.achieved.setZero(n, kNumQos);
  snap.satisfaction.setZero(n, kNumQos);
  snap.link_rate_bps.setZero(n, scenario_.num_bs());
  for (int i = 0; i < n; ++i) {
    const int j = snap.serving_bs(i);
    double rate = 0.0;
    if (j >= 0) {
      const double sinr = snapshot_sinr(snap, i, j, noise_w);
      rate = data_rate_bps(sinr, scenario_.channel.bandwidth_hz);
      snap.link_rate_bps(i, j) = rate;
    }
    const double demand = snap.demand_bps[i];
    const double delay = (rate > demand)
                             ? std::min(dm.packet_bits / (rate - demand), dm.max_delay_s)
                             : dm.max_delay_s;
    const double loss =
        rate > 0.0 ? std::clamp(demand / rate - 1.0, 0.0, 1.0) * dm.loss_scale
                   : dm.loss_scale;
    snap.achieved(i, 0) = rate;
    snap.achieved(i, 1) = delay;
    snap.achieved(i, 2) = loss;
    const auto& u = scenario_.users[i];
    for (int q = 0; q < kNumQos; ++q) {
      double s = qos_satisfaction(kQosMetrics[q], snap.achieved(i, q), u.qos_required[q]);
      snap.satisfaction(i, q) = std::min(s, 1e6);  // keep finite for downstream stats
    }
  }
}

const NetworkSnapshot& Simulator::step() {
  const int t = next_tick_++;
  const int n = scenario_.num_users();
  const int m = scenario_.num_bs();

  if (t > 0) advance_positions();

  NetworkSnapshot snap;
  snap.tick = t;
  snap.gain = draw_gains(t);
  snap.demand_bps = draw_demand(t);
  snap.assoc = Eigen::MatrixXi::Zero(n, m);
  snap.power_w = Matrix::Zero(n, m);
  snap.user_pos.resize(n, 2);
  snap.user_speed_mps.resize(n);
  for (int i = 0; i < n; ++i) {
    snap.user_pos.row(i) = scenario_.users[i].position.transpose();
    snap.user_speed_mps[i] = scenario_.users[i].speed_mps;
  }

  const Eigen::MatrixXi reach = potential_links();

  // association: pins first, then best received power under max transmit
  std::vector<double> pinned_power(m, 0.0);
  for (int i = 0; i < n; ++i) {
    if (pins_[i] && pins_[i]->bs >= 0) {
      snap.assoc(i, pins_[i]->bs) = 1;
      snap.power_w(i, pins_[i]->bs) = pins_[i]->power_w;
      pinned_power[pins_[i]->bs] += pins_[i]->power_w;
    }
  }
  std::vector<int> shared_users(m, 0);
  for (int i = 0; i < n; ++i) {
    if (pins_[i]) continue;
    int best = -1;
    double best_rx = -1.0;
    for (int j = 0; j < m; ++j) {
      if (!reach(i, j)) continue;
      const double rx = dbm_to_watt(scenario_.base_stations[j].max_power_dbm) * snap.gain(i, j);
      if (rx > best_rx) {
        best_rx = rx;
        best = j;
      }
    }
    if (best < 0) {  // out of every coverage zone: camp on the strongest signal
      for (int j = 0; j < m; ++j) {
        const double rx =
            dbm_to_watt(scenario_.base_stations[j].max_power_dbm) * snap.gain(i, j);
        if (rx > best_rx) {
          best_rx = rx;
          best = j;
        }
      }
    }
    snap.assoc(i, best) = 1;
    shared_users[best]++;
  }
  for (int j = 0; j < m; ++j) {
    if (shared_users[j] == 0) continue;
    const double budget = dbm_to_watt(scenario_.base_stations[j].max_power_dbm);
    const double share = std::max(budget - pinned_power[j], 0.0) / shared_users[j];
    for (int i = 0; i < n; ++i)
      if (snap.assoc(i, j) && !pins_[i]) snap.power_w(i, j) = share;
  }

  snap.bs_load_bps.setZero(m);
  for (int i = 0; i < n; ++i) {
    const int j = snap.serving_bs(i);
    if (j >= 0) snap.bs_load_bps[j] += snap.demand_bps[i];
  }

  compute_qos(snap);
  history_.push_back(std::move(snap));
  return history_.back();
}

void Simulator::run_to(int ticks) {
  while (static_cast<int>(history_.size()) < ticks) step();
}

Eigen::MatrixXi Simulator::potential_links() const {
  const int n = scenario_.num_users();
  const int m = scenario_.num_bs();
  Eigen::MatrixXi x(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const auto& bs = scenario_.base_stations[j];
      x(i, j) = (scenario_.users[i].position - bs.position).norm() <=
                        bs.coverage_radius_m
                    ? 1
                    : 0;
    }
  return x;
}

void Simulator::apply_policy(const std::vector<PinnedLink>& pins) {
  const int m = scenario_.num_bs();
  std::vector<double> budget_used(m, 0.0);
  std::vector<std::optional<PinnedLink>> staged = pins_;
  for (const auto& p : pins) {
    if (p.user < 0 || p.user >= scenario_.num_users() || p.bs < 0 || p.bs >= m)
      throw std::invalid_argument("apply_policy: link index out of range");
    if (p.power_w < 0.0) throw std::invalid_argument("apply_policy: negative power (C4)");
    staged[p.user] = p;
  }
  for (int i = 0; i < scenario_.num_users(); ++i)
    if (staged[i]) budget_used[staged[i]->bs] += staged[i]->power_w;
  for (int j = 0; j < m; ++j) {
    const double budget = dbm_to_watt(scenario_.base_stations[j].max_power_dbm);
    if (budget_used[j] > budget * (1.0 + 1e-9))
      throw std::invalid_argument("apply_policy: BS " + std::to_string(j) +
                                  " power budget exceeded (C5)");
  }
  pins_ = std::move(staged);
}

void Simulator::clear_policy() {
  pins_.assign(scenario_.num_users(), std::nullopt);
}

}  // namespace hettwin
