#include "hettwin/valuation/kmeans.hpp"
#include "hettwin/valuation/sample_entropy.hpp"
#include "hettwin/valuation/stats.hpp"
#include "hettwin/valuation/valuation.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hettwin;

namespace {

/// Brute-force sample entropy: recomputes every Chebyshev distance from
/// scratch at both template lengths. Independent oracle for the library path.
double sampen_oracle(const Vector& x, int m, double tol_frac) {
  const Index n = x.size();
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / n);
  if (sd == 0.0) return 0.0;
  const double tol = tol_frac * sd;
  auto cheb = [&](Index a, Index b, int len) {
    double d = 0.0;
    for (int l = 0; l < len; ++l) d = std::max(d, std::abs(x[a + l] - x[b + l]));
    return d;
  };
  long long cm = 0, cm1 = 0;
  for (Index u = 0; u + m < n; ++u)
    for (Index v = 0; v + m < n; ++v) {
      if (u == v) continue;
      if (cheb(u, v, m) < tol) ++cm;
      if (cheb(u, v, m + 1) < tol) ++cm1;
    }
  if (cm == 0 || cm1 == 0) return kInf;
  return -std::log(static_cast<double>(cm1) / static_cast<double>(cm));
}

Vector gaussian_series(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = g(rng);
  return x;
}

}  // namespace

TEST_CASE("sample entropy basics") {
  SUBCASE("constant series has zero entropy") {
    CHECK(sample_entropy(Vector::Constant(100, 5.0)) == 0.0);
  }
  SUBCASE("series too short") {
    CHECK_THROWS_AS(sample_entropy(Vector::Ones(3)), std::domain_error);
  }
  SUBCASE("white noise lands in the expected band") {
    const Vector x = gaussian_series(1000, 7);
    const double v = sample_entropy(x, {2, 0.2});
    CHECK(v >= 2.0);
    CHECK(v <= 2.6);
  }
  SUBCASE("a sine is more regular than noise of the same length") {
    Vector s(500);
    for (Index t = 0; t < 500; ++t)
      s[t] = std::sin(2.0 * std::numbers::pi * t / 50.0);
    const Vector noise = gaussian_series(500, 21);
    CHECK(sample_entropy(s, {2, 0.2}) < sample_entropy(noise, {2, 0.2}));
  }
}

TEST_CASE("sample entropy agrees with the brute-force oracle") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    for (Index n : {40, 120, 200}) {
      const Vector x = gaussian_series(n, seed);
      const double lib = sample_entropy(x, {2, 0.2});
      const double oracle = sampen_oracle(x, 2, 0.2);
      if (std::isinf(oracle))
        CHECK(std::isinf(lib));
      else
        CHECK(lib == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("sample entropy invariances") {
  const Vector x = gaussian_series(300, 5);
  SUBCASE("scale invariance with fractional tolerance") {
    CHECK(sample_entropy(x, {2, 0.2}) == sample_entropy((7.3 * x).eval(), {2, 0.2}));
  }
  SUBCASE("monotone in tolerance") {
    double prev = kInf;
    for (double g : {0.1, 0.2, 0.4, 0.8}) {
      const double v = sample_entropy(x, {2, g});
      CHECK(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("pearson correlation") {
  Vector x(6);
  x << 1, 2, 3, 4, 5, 6;
  CHECK(pearson(x, ((2.0 * x).array() + 3.0).matrix()) == doctest::Approx(1.0));
  CHECK(pearson(x, -x) == doctest::Approx(-1.0));
  Vector a(4), b(4);
  a << 1, 2, 3, 4;
  b << 1, 3, 2, 4;
  CHECK(pearson(a, b) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_THROWS_AS(pearson(x, Vector::Ones(6)), std::domain_error);
}

TEST_CASE("pearson affine invariance") {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> g;
  Vector x(80), y(80);
  for (Index i = 0; i < 80; ++i) {
    x[i] = g(rng);
    y[i] = g(rng) + 0.4 * x[i];
  }
  const double rho = pearson(x, y);
  for (double a : {2.5, -0.7}) {
    const Vector ax = ((a * x).array() + 1.3).matrix();
    const double expected = (a > 0 ? 1.0 : -1.0) * rho;
    CHECK(pearson(ax, y) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("granger causality") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;

  SUBCASE("lagged driver is detected and benefit raised") {
    const Index n = 400;
    Vector x(n), q(n);
    for (Index t = 0; t < n; ++t) x[t] = g(rng);
    q[0] = g(rng);
    for (Index t = 1; t < n; ++t) q[t] = 0.9 * x[t - 1] + 0.05 * g(rng);
    const GrangerResult res = granger_causality(x, q, 3);
    CHECK(res.causal);
    CHECK(res.p_value < 0.05);
    CHECK(granger_refine(0.1, x, q, 3) == doctest::Approx(0.3));
    CHECK(granger_refine(-0.1, x, q, 3) == doctest::Approx(-0.3));
  }

  SUBCASE("independent noise stays undetected in >= 90% of trials") {
    int false_hits = 0;
    for (int trial = 0; trial < 100; ++trial) {
      Vector x(200), q(200);
      for (Index t = 0; t < 200; ++t) {
        x[t] = g(rng);
        q[t] = g(rng);
      }
      if (granger_causality(x, q, 3).causal) ++false_hits;
    }
    CHECK(false_hits <= 10);
  }

  SUBCASE("trigger guard leaves strong correlations untouched") {
    Vector x(100), q(100);
    for (Index t = 0; t < 100; ++t) {
      x[t] = g(rng);
      q[t] = x[t];
    }
    CHECK(granger_refine(0.9, x, q, 3) == 0.9);
  }

  SUBCASE("rank-deficient design reports no causality") {
    const Vector x = Vector::Zero(100);
    Vector q(100);
    for (Index t = 0; t < 100; ++t) q[t] = g(rng);
    const GrangerResult res = granger_causality(x, q, 2);
    CHECK(res.rank_deficient);
    CHECK(!res.causal);
  }
}

TEST_CASE("aggregate benefit is the weighted sum") {
  Vector rho1(1), w1(1);
  rho1 << 0.7;
  w1 << 1.0;
  CHECK(aggregate_benefit(rho1, w1) == doctest::Approx(0.7));
  Vector rho2(2), w2(2);
  rho2 << 1.0, -1.0;
  w2 << 0.5, 0.5;
  CHECK(aggregate_benefit(rho2, w2) == doctest::Approx(0.0));
  Vector rho3(2), w3(2);
  rho3 << 0.5, 0.2;
  w3 << 0.3, 0.7;
  CHECK(aggregate_benefit(rho3, w3) == doctest::Approx(0.29));
  Vector bad_w(2);
  bad_w << 0.3, 0.3;
  CHECK_THROWS_AS(aggregate_benefit(rho3, bad_w), std::domain_error);
}

TEST_CASE("kmeans recovers well-separated blobs and keeps the objective sane") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.01);
  const std::vector<std::pair<double, double>> centers = {
      {0.1, 0.9}, {0.9, 0.9}, {0.1, 0.1}, {0.9, 0.1}};
  Matrix pts(40, 2);
  for (int c = 0; c < 4; ++c)
    for (int k = 0; k < 10; ++k) {
      pts(c * 10 + k, 0) = centers[c].first + g(rng);
      pts(c * 10 + k, 1) = centers[c].second + g(rng);
    }
  const KMeansResult km = kmeans(pts, 4, 99);
  // every blob maps to exactly one cluster
  for (int c = 0; c < 4; ++c)
    for (int k = 1; k < 10; ++k)
      CHECK(km.assignment[c * 10 + k] == km.assignment[c * 10]);
  // assignment is a nearest-centroid fixpoint
  for (Index i = 0; i < pts.rows(); ++i) {
    double own = (pts.row(i) - km.centroids.row(km.assignment[i])).squaredNorm();
    for (int c = 0; c < 4; ++c)
      CHECK(own <= (pts.row(i) - km.centroids.row(c)).squaredNorm() + 1e-12);
  }
  CHECK_THROWS_AS(kmeans(Matrix::Ones(5, 2), 4, 1), std::domain_error);
}

TEST_CASE("differentiate assigns four ordered levels") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 0.01);
  const std::vector<std::pair<double, double>> centers = {
      {0.1, 0.9}, {0.9, 0.9}, {0.1, 0.1}, {0.9, 0.1}};  // (entropy, |benefit|)
  std::vector<ModelingValue> values;
  for (int c = 0; c < 4; ++c)
    for (int k = 0; k < 8; ++k) {
      ModelingValue v;
      v.entity_id = "ue" + std::to_string(c * 8 + k);
      v.attribute = "a";
      v.entropy = centers[c].first + g(rng);
      v.benefit = centers[c].second + g(rng);
      values.push_back(v);
    }
  ValuationConfig cfg;
  cfg.seed = 3;
  differentiate(values, cfg);

  // L1 is the low-entropy/high-benefit blob, L4 the opposite corner
  for (int k = 0; k < 8; ++k) {
    CHECK(values[k].level == 1);
    CHECK(values[3 * 8 + k].level == 4);
  }
  // level ordering by mean (|benefit| - entropy)
  std::array<double, 5> score_sum{}, count{};
  for (const auto& v : values) {
    score_sum[v.level] += std::abs(v.benefit) - v.entropy;
    count[v.level] += 1.0;
  }
  for (int l = 1; l < 4; ++l)
    CHECK(score_sum[l] / count[l] >=
          score_sum[l + 1] / count[l + 1] - 1e-12);

  SUBCASE("identical points cannot be split") {
    std::vector<ModelingValue> flat(6);
    for (auto& v : flat) {
      v.entropy = 0.5;
      v.benefit = 0.5;
    }
    CHECK_THROWS_AS(differentiate(flat, cfg), std::domain_error);
  }
}
