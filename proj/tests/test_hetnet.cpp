#include "hettwin/hetnet/channel.hpp"
#include "hettwin/hetnet/simulator.hpp"
#include "hettwin/hetnet/trace.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hettwin;

namespace {

Config small_config(int users = 6, int macro = 1, int small = 2, std::uint64_t seed = 3) {
  std::ostringstream os;
  os << "[network]\nusers = " << users << "\nmacro_bs = " << macro
     << "\nsmall_bs = " << small << "\nseed = " << seed << "\narena_m = 400\n"
     << "[traffic]\nbase_rate_bps = 3e6\ndaily_amp = 0.5\nnoise_frac = 0.05\n"
     << "[trace]\nduration_h = 72\ninterval_min_s = 1800\ninterval_max_s = 3600\n";
  return Config::parse_string(os.str());
}

}  // namespace

TEST_CASE("path loss matches the tier formulas") {
  CHECK(path_loss_db(Tier::kMacro, 100.0) == doctest::Approx(90.5).epsilon(1e-12));
  CHECK(path_loss_db(Tier::kMacro, 1.0) == doctest::Approx(15.3).epsilon(1e-12));
  CHECK(path_loss_db(Tier::kSmall, 1.0) == doctest::Approx(9.16).epsilon(1e-12));
  CHECK(path_loss_db(Tier::kSmall, 50.0) ==
        doctest::Approx(77.43940008672038).epsilon(1e-12));
  CHECK_THROWS_AS(path_loss_db(Tier::kMacro, 0.0), std::domain_error);
  CHECK_THROWS_AS(path_loss_db(Tier::kSmall, -3.0), std::domain_error);
}

TEST_CASE("data rate is Shannon capacity") {
  CHECK(data_rate_bps(0.0, 20e6) == 0.0);
  CHECK(data_rate_bps(1.0, 20e6) == doctest::Approx(2.0e7).epsilon(1e-12));
  CHECK(data_rate_bps(3.0, 10e6) == doctest::Approx(2.0e7).epsilon(1e-12));
  CHECK_THROWS_AS(data_rate_bps(-0.1, 1e6), std::domain_error);
}

TEST_CASE("data rate strictly increases with sinr") {
  double prev = data_rate_bps(0.0, 5e6);
  for (double s = 0.25; s < 64.0; s *= 2.0) {
    const double cur = data_rate_bps(s, 5e6);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("qos satisfaction handles inverted metrics") {
  CHECK(qos_satisfaction(QosMetric::kThroughput, 5e6, 5e6) == doctest::Approx(1.0));
  CHECK(qos_satisfaction(QosMetric::kThroughput, 5e6, 10e6) == doctest::Approx(0.5));
  CHECK(qos_satisfaction(QosMetric::kDelay, 0.020, 0.010) == doctest::Approx(0.5));
  CHECK(qos_satisfaction(QosMetric::kLoss, 0.01, 0.02) == doctest::Approx(2.0));
  CHECK_THROWS_AS(qos_satisfaction(QosMetric::kThroughput, 1.0, 0.0),
                  std::domain_error);
}

TEST_CASE("snapshot sinr matches spelled-out arithmetic") {
  // hand-built 2-user/2-BS case, recomputed with plain arithmetic
  Scenario sc = Scenario::from_config(small_config(2, 2, 0, 1));
  Simulator sim(sc);
  const NetworkSnapshot& snap = sim.step();

  const int j0 = snap.serving_bs(0);
  REQUIRE(j0 >= 0);
  const double noise = sc.channel.noise_watt();
  const double signal = snap.power_w(0, j0) * snap.gain(0, j0);
  double interf = 0.0;
  for (int l = 0; l < sc.num_bs(); ++l) {
    if (l == j0) continue;
    double tx = 0.0;
    for (int i = 0; i < sc.num_users(); ++i) tx += snap.power_w(i, l);
    interf += tx * snap.gain(0, l);
  }
  const double expected = signal / (interf + noise);
  CHECK(snapshot_sinr(snap, 0, j0, noise) == doctest::Approx(expected).epsilon(1e-12));

  SUBCASE("no active association is a state error") {
    int free_bs = -1;
    for (int j = 0; j < sc.num_bs(); ++j)
      if (!snap.assoc(0, j)) free_bs = j;
    REQUIRE(free_bs >= 0);
    CHECK_THROWS_AS(snapshot_sinr(snap, 0, free_bs, noise), std::logic_error);
  }
}

TEST_CASE("single-bs sinr degenerate cases") {
  // signal power equal to noise, no interferers -> SINR 1
  NetworkSnapshot snap;
  snap.assoc = Eigen::MatrixXi::Zero(1, 1);
  snap.assoc(0, 0) = 1;
  snap.power_w = Matrix::Constant(1, 1, 2.0);
  snap.gain = Matrix::Constant(1, 1, 0.5);
  CHECK(snapshot_sinr(snap, 0, 0, 1.0) == doctest::Approx(1.0));

  // interferer at the same received power with negligible noise -> SINR -> 1
  NetworkSnapshot two;
  two.assoc = Eigen::MatrixXi::Zero(2, 2);
  two.assoc(0, 0) = 1;
  two.assoc(1, 1) = 1;
  two.power_w = Matrix::Zero(2, 2);
  two.power_w(0, 0) = 1.0;
  two.power_w(1, 1) = 1.0;
  two.gain = Matrix::Constant(2, 2, 1e-6);
  CHECK(snapshot_sinr(two, 0, 0, 1e-18) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("adding an interferer never raises sinr") {
  Scenario sc = Scenario::from_config(small_config(3, 1, 2, 11));
  Simulator sim(sc);
  const NetworkSnapshot& snap = sim.step();
  const double noise = sc.channel.noise_watt();
  const int j = snap.serving_bs(0);
  const double before = snapshot_sinr(snap, 0, j, noise);

  NetworkSnapshot bumped = snap;
  for (int l = 0; l < sc.num_bs(); ++l) {
    if (l == j) continue;
    bumped.power_w(2, l) += 0.01;  // extra transmit power elsewhere
  }
  CHECK(snapshot_sinr(bumped, 0, j, noise) <= before);
}

TEST_CASE("step is deterministic and demand responds to config") {
  SUBCASE("degenerate generator: zero amplitudes, zero noise") {
    Config cfg = Config::parse_string(
        "[network]\nusers = 3\nmacro_bs = 1\nsmall_bs = 0\nseed = 5\n"
        "[traffic]\nbase_rate_bps = 2e6\ndaily_amp = 0\nweekly_amp = 0\nnoise_frac = 0\n");
    Simulator sim(Scenario::from_config(cfg));
    sim.run_to(30);
    for (const auto& snap : sim.history())
      for (int i = 0; i < 3; ++i)
        CHECK(snap.demand_bps[i] ==
              doctest::Approx(sim.scenario().users[i].base_rate_bps));
  }

  SUBCASE("same seed, same scenario, run twice: identical snapshots") {
    Simulator a(Scenario::from_config(small_config()));
    Simulator b(Scenario::from_config(small_config()));
    a.run_to(48);
    b.run_to(48);
    for (int t = 0; t < 48; ++t) {
      CHECK(a.history()[t].gain == b.history()[t].gain);
      CHECK(a.history()[t].demand_bps == b.history()[t].demand_bps);
      CHECK(a.history()[t].assoc == b.history()[t].assoc);
      CHECK(a.history()[t].satisfaction == b.history()[t].satisfaction);
    }
  }

  SUBCASE("daily seasonality shows up at lag 24") {
    Simulator sim(Scenario::from_config(small_config(4, 1, 0, 9)));
    sim.run_to(24 * 14);
    auto autocorr = [&](const Vector& x, int lag) {
      const Index n = x.size() - lag;
      const double mu = x.mean();
      double num = 0.0, den = 0.0;
      for (Index t = 0; t < x.size(); ++t) den += (x[t] - mu) * (x[t] - mu);
      for (Index t = 0; t < n; ++t) num += (x[t] - mu) * (x[t + lag] - mu);
      return num / den;
    };
    Vector demand(sim.ticks());
    for (int t = 0; t < sim.ticks(); ++t) demand[t] = sim.history()[t].demand_bps[0];
    CHECK(autocorr(demand, 24) > 0.9);
    CHECK(autocorr(demand, 24) > autocorr(demand, 13));
  }
}

TEST_CASE("power feasibility holds every tick") {
  Scenario sc = Scenario::from_config(small_config(8, 1, 3, 17));
  Simulator sim(sc);
  sim.run_to(50);
  for (const auto& snap : sim.history()) {
    const auto report = check_constraints(snap, sc);
    CHECK(report.ok);
    for (int j = 0; j < sc.num_bs(); ++j) {
      double used = 0.0;
      for (int i = 0; i < sc.num_users(); ++i)
        if (snap.assoc(i, j)) used += snap.power_w(i, j);
      CHECK(used <= dbm_to_watt(sc.base_stations[j].max_power_dbm) * (1 + 1e-9));
    }
  }
}

TEST_CASE("apply_policy validates and pins links") {
  Scenario sc = Scenario::from_config(small_config(4, 1, 1, 23));
  Simulator sim(sc);
  sim.step();
  const double budget = dbm_to_watt(sc.base_stations[0].max_power_dbm);
  CHECK_THROWS_AS(sim.apply_policy({{0, 0, budget * 1.5}}), std::invalid_argument);
  CHECK_THROWS_AS(sim.apply_policy({{0, 0, -1.0}}), std::invalid_argument);
  sim.apply_policy({{0, 0, budget * 0.5}});
  const NetworkSnapshot& snap = sim.step();
  CHECK(snap.assoc(0, 0) == 1);
  CHECK(snap.power_w(0, 0) == doctest::Approx(budget * 0.5));
  CHECK(check_constraints(snap, sc).ok);
}

TEST_CASE("trace bundle: corrupted stamps, ground truth, serialization") {
  Scenario sc = Scenario::from_config(small_config(3, 1, 1, 29));
  sc.clock.skew_ppm_max = 100.0;
  sc.clock.offset_s_max = 0.5;
  Simulator sim(sc);
  TraceBundle bundle = generate_trace(sim, 72, sc.clock);

  SUBCASE("timestamps strictly increasing, truth stored separately") {
    for (const auto& s : bundle.series) {
      REQUIRE(s.size() > 10);
      CHECK(timestamps_increasing(s.timestamps));
      REQUIRE(bundle.clock_truth.count(s.entity_id));
      const auto& truth = bundle.clock_truth.at(s.entity_id);
      // recover the true instants and check they sit on the device cadence
      const double t0 = (s.timestamps[0] - truth.offset_s) / (1.0 + truth.skew);
      const double phase = std::fmod(t0 + 1e-6, s.nominal_interval_s);
      CHECK(phase < 1e-3);
    }
  }

  SUBCASE("identical seed reproduces a byte-identical serialization") {
    auto make = [&]() {
      Scenario s2 = Scenario::from_config(small_config(3, 1, 1, 29));
      s2.clock = sc.clock;
      Simulator sim2(s2);
      return generate_trace(sim2, 72, sc.clock);
    };
    TraceBundle b2 = make();
    TraceBundle b3 = make();
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "hettwin_trace_test";
    fs::create_directories(dir);
    write_trace_csv(b2, (dir / "a.csv").string());
    write_trace_csv(b3, (dir / "b.csv").string());
    std::ifstream fa(dir / "a.csv"), fb(dir / "b.csv");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().substr(0, 38) == "entity_id,attribute,timestamp_s,value\n");
  }

  SUBCASE("round trip through CSV + sidecar") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "hettwin_trace_rt";
    fs::create_directories(dir);
    write_trace_csv(bundle, (dir / "t.csv").string());
    write_clock_sidecar(bundle, (dir / "t.json").string());
    TraceBundle back =
        read_trace_csv((dir / "t.csv").string(), (dir / "t.json").string());
    REQUIRE(back.series.size() == bundle.series.size());
    const auto* s0 = back.find(bundle.series[0].entity_id, bundle.series[0].attribute);
    REQUIRE(s0 != nullptr);
    CHECK(s0->values.isApprox(bundle.series[0].values));
    CHECK(back.clock_truth.size() == bundle.clock_truth.size());
    for (const auto& [id, truth] : bundle.clock_truth)
      CHECK(back.clock_truth.at(id).skew == doctest::Approx(truth.skew).epsilon(1e-12));
  }
}

TEST_CASE("trace flags STL periods longer than the duration") {
  Scenario sc = Scenario::from_config(small_config(2, 1, 0, 31));
  Simulator sim(sc);
  TraceBundle bundle = generate_trace(sim, 100, sc.clock, {24.0, 168.0});
  CHECK(bundle.stl_period_warning);
}
