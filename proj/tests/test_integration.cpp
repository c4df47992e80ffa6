#include "hettwin/integration/clock.hpp"
#include "hettwin/integration/gpr.hpp"
#include "hettwin/integration/normalize.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hettwin;

TEST_CASE("z-score normalization") {
  Vector x(4);
  x << 2, 2, 4, 4;
  ZScore z;
  const Vector out = normalize(x, &z);
  Vector expected(4);
  expected << -1, -1, 1, 1;
  CHECK(out.isApprox(expected, 1e-12));

  SUBCASE("post-transform moments") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(3.0, 2.5);
    Vector y(200);
    for (Index i = 0; i < 200; ++i) y[i] = g(rng);
    const Vector ny = normalize(y);
    CHECK(ny.mean() == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(std::sqrt(ny.squaredNorm() / ny.size()) == doctest::Approx(1.0));
  }
  SUBCASE("inverse round trip") {
    CHECK(z.invert(z.apply(x)).isApprox(x, 1e-12));
  }
  SUBCASE("idempotent on normalized input") {
    const Vector once = normalize(x);
    CHECK(normalize(once).isApprox(once, 1e-12));
  }
  SUBCASE("zero variance rejected") {
    CHECK_THROWS_AS(normalize(Vector::Ones(5)), std::domain_error);
  }
}

namespace {

struct CorruptedDevice {
  DeviceClockTruth truth;
  Vector stamps;
  ExchangeRecord exchange;
};

CorruptedDevice make_device(double skew, double offset_s, double interval_s, int count,
                            double jitter_s, std::uint64_t seed) {
  CorruptedDevice dev;
  dev.truth = {skew, offset_s};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jit(-jitter_s, jitter_s);
  auto j = [&]() { return jitter_s > 0.0 ? jit(rng) : 0.0; };
  dev.stamps.resize(count);
  for (int k = 0; k < count; ++k) {
    const double t = (k + 1) * interval_s;
    dev.stamps[k] = (1.0 + skew) * t + offset_s + j();
  }
  const double t1 = 40.0, prop = 0.4e-3, turn = 1.1e-3;
  dev.exchange.t_con_tx = t1;
  dev.exchange.t_dev_rx = (1.0 + skew) * (t1 + prop) + offset_s + j();
  dev.exchange.t_dev_tx = (1.0 + skew) * (t1 + prop + turn) + offset_s + j();
  dev.exchange.t_con_rx = t1 + prop + turn + prop + j();
  return dev;
}

}  // namespace

TEST_CASE("clock estimation recovers injected parameters") {
  SUBCASE("perfect clock") {
    const CorruptedDevice dev = make_device(0.0, 0.0, 1800, 100, 0.0, 1);
    const ClockEstimate est = estimate_clock(dev.stamps, 1800, dev.exchange);
    CHECK(est.skew == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(std::abs(est.offset_s) < 1e-12);
  }
  SUBCASE("50 ppm + 10 ms recovered exactly in the noise-free case") {
    const CorruptedDevice dev = make_device(50e-6, 0.010, 1800, 200, 0.0, 2);
    const ClockEstimate est = estimate_clock(dev.stamps, 1800, dev.exchange);
    CHECK(std::abs(est.skew - 50e-6) <= 1e-9 * 50e-6 + 1e-15);
    CHECK(std::abs(est.offset_s - 0.010) <= 1e-7);
  }
  SUBCASE("offset error bounded under timestamp jitter") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const CorruptedDevice dev = make_device(30e-6, 0.004, 1800, 120, 1e-4, seed);
      const ClockEstimate est = estimate_clock(dev.stamps, 1800, dev.exchange);
      worst = std::max(worst, std::abs(est.offset_s - 0.004));
    }
    CHECK(worst <= 2e-4);
  }
  SUBCASE("degenerate timestamps rejected") {
    Vector same = Vector::Constant(5, 100.0);
    CHECK_THROWS_AS(estimate_clock(same, 10.0, ExchangeRecord{}), std::domain_error);
    CHECK_THROWS_AS(estimate_clock(Vector::Ones(1), 10.0, ExchangeRecord{}),
                    std::domain_error);
  }
}

TEST_CASE("compensation inverts the corruption") {
  const CorruptedDevice dev = make_device(80e-6, -0.02, 900, 150, 0.0, 9);
  const ClockEstimate est = estimate_clock(dev.stamps, 900, dev.exchange);

  AttributeSeries series;
  series.entity_id = "ue0";
  series.attribute = "throughput";
  series.timestamps = dev.stamps;
  series.values = Vector::LinSpaced(150, 0.0, 149.0);
  const AttributeSeries fixed = compensate(series, est);

  SUBCASE("round trip against stored ground truth") {
    for (Index k = 0; k < fixed.size(); ++k) {
      const double true_t = (k + 1) * 900.0;
      CHECK(fixed.timestamps[k] == doctest::Approx(true_t).epsilon(1e-9));
    }
  }
  SUBCASE("zero estimate is the identity") {
    const AttributeSeries same = compensate(series, ClockEstimate{});
    CHECK(same.timestamps.isApprox(series.timestamps));
  }
  SUBCASE("re-corruption with the same estimate is the identity") {
    for (Index k = 0; k < fixed.size(); ++k)
      CHECK(est.corrupt(fixed.timestamps[k]) ==
            doctest::Approx(series.timestamps[k]).epsilon(1e-12));
  }
  SUBCASE("monotonicity preserved") {
    CHECK(timestamps_increasing(fixed.timestamps));
  }
}

TEST_CASE("gpr resampling") {
  SUBCASE("interpolation reproduces noise-free observations") {
    Vector t(7), y(7);
    t << 0, 1, 2, 3, 4, 5, 6;
    y << 0.3, -0.1, 0.8, 1.4, 0.9, 0.2, -0.4;
    GprConfig cfg;
    cfg.noise_var = 0.0;
    const ResampledSeries out = gpr_resample(t, y, t, cfg);
    for (Index k = 0; k < 7; ++k)
      CHECK(out.mean[k] == doctest::Approx(y[k]).epsilon(1e-6));
  }

  SUBCASE("sine midpoints within 1e-2 rmse at length-scale 1") {
    const Index n = 20;
    Vector t(n), y(n);
    for (Index k = 0; k < n; ++k) {
      t[k] = 4.0 * std::numbers::pi * k / (n - 1);
      y[k] = std::sin(t[k]);
    }
    Vector mid(n - 1);
    for (Index k = 0; k + 1 < n; ++k) mid[k] = 0.5 * (t[k] + t[k + 1]);
    GprConfig cfg;
    cfg.length_scale = 1.0;
    cfg.noise_var = 0.0;
    const ResampledSeries out = gpr_resample(t, y, mid, cfg);
    double sq = 0.0;
    for (Index k = 0; k < mid.size(); ++k) {
      const double err = out.mean[k] - std::sin(mid[k]);
      sq += err * err;
    }
    CHECK(std::sqrt(sq / mid.size()) < 1e-2);
  }

  SUBCASE("posterior variance: bounded by prior, wide far away") {
    Vector t(10), y(10);
    for (Index k = 0; k < 10; ++k) {
      t[k] = k;
      y[k] = std::cos(0.7 * k);
    }
    GprConfig cfg;
    cfg.length_scale = 1.0;
    cfg.noise_var = 1e-6;
    Vector grid = Vector::LinSpaced(200, -20.0, 30.0);
    const ResampledSeries out = gpr_resample(t, y, grid, cfg);
    for (Index k = 0; k < grid.size(); ++k) {
      CHECK(out.variance[k] >= 0.0);
      CHECK(out.variance[k] <= out.signal_var * (1.0 + 1e-9));
      if (grid[k] < t[0] - 5.0 || grid[k] > t[9] + 5.0)
        CHECK(out.variance[k] >= 0.9 * out.signal_var);
    }
  }

  SUBCASE("posterior mean linear in observations") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g;
    Vector t(12), x(12), y(12);
    for (Index k = 0; k < 12; ++k) {
      t[k] = k * 0.8;
      x[k] = g(rng);
      y[k] = g(rng);
    }
    Vector grid = Vector::LinSpaced(9, 0.3, 8.1);
    GprConfig cfg;
    cfg.length_scale = 1.2;
    cfg.signal_var = 1.0;  // shared kernel for all three resamples
    cfg.noise_var = 1e-4;
    const double a = 1.7, b = -0.6;
    const Vector combo = a * x + b * y;
    const ResampledSeries rx = gpr_resample(t, x, grid, cfg);
    const ResampledSeries ry = gpr_resample(t, y, grid, cfg);
    const ResampledSeries rc = gpr_resample(t, combo, grid, cfg);
    for (Index k = 0; k < grid.size(); ++k)
      CHECK(rc.mean[k] == doctest::Approx(a * rx.mean[k] + b * ry.mean[k]).epsilon(1e-8));
  }

  SUBCASE("rejects too few observations") {
    Vector t(2), y(2);
    t << 0, 1;
    y << 1, 2;
    CHECK_THROWS_AS(gpr_resample(t, y, t, {}), std::domain_error);
  }
}
