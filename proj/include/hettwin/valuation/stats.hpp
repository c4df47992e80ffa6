#pragma once

#include "hettwin/types.hpp"

#include <cmath>
#include <stdexcept>

namespace hettwin {

/// Pearson product-moment correlation. Undefined (domain error) when either
/// input has zero variance.
template <typename DerivedX, typename DerivedY>
double pearson(const Eigen::MatrixBase<DerivedX>& xs,
               const Eigen::MatrixBase<DerivedY>& ys) {
  if (xs.size() != ys.size()) throw std::domain_error("pearson: length mismatch");
  const Index n = xs.size();
  if (n < 2) throw std::domain_error("pearson: need at least 2 samples");
  const Vector x = xs.template cast<double>();
  const Vector y = ys.template cast<double>();
  const Vector xc = x.array() - x.mean();
  const Vector yc = y.array() - y.mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  if (sxx == 0.0 || syy == 0.0)
    throw std::domain_error("pearson: zero-variance input");
  return xc.dot(yc) / std::sqrt(sxx * syy);
}

namespace detail {

/// Regularized incomplete beta I_x(a, b) via the standard continued fraction
/// (modified Lentz), good to ~1e-12 for the F-test ranges used here.
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

inline double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

/// Upper tail P(F > f) for an F(d1, d2) statistic.
inline double f_distribution_sf(double f, double d1, double d2) {
  if (f <= 0.0) return 1.0;
  const double x = d2 / (d2 + d1 * f);
  return detail::regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, x);
}

struct GrangerResult {
  double f_stat = 0.0;
  double p_value = 1.0;
  bool causal = false;
  bool rank_deficient = false;  // design collapsed; reported as "no causality"
  int lag = 0;
};

/// Granger test of "x helps predict q": compares the residual sum of squares
/// of an AR(max_lag) model of q against the same model augmented with x lags,
/// via the standard F statistic.
inline GrangerResult granger_causality(const Vector& x, const Vector& q, int max_lag,
                                       double alpha = 0.05) {
  if (x.size() != q.size())
    throw std::domain_error("granger_causality: length mismatch");
  if (max_lag < 1) throw std::domain_error("granger_causality: max_lag must be >= 1");
  const Index n = q.size();
  const Index rows = n - max_lag;
  const int p_restricted = max_lag + 1;
  const int p_full = 2 * max_lag + 1;
  GrangerResult res;
  res.lag = max_lag;
  if (rows < p_full + 2) throw std::domain_error("granger_causality: series too short");

  Matrix design(rows, p_full);
  Vector target(rows);
  for (Index t = 0; t < rows; ++t) {
    const Index i = t + max_lag;
    target[t] = q[i];
    design(t, 0) = 1.0;
    for (int l = 1; l <= max_lag; ++l) {
      design(t, l) = q[i - l];
      design(t, max_lag + l) = x[i - l];
    }
  }

  Eigen::ColPivHouseholderQR<Matrix> qr_full(design);
  Eigen::ColPivHouseholderQR<Matrix> qr_restricted(design.leftCols(p_restricted));
  if (qr_full.rank() < p_full || qr_restricted.rank() < p_restricted) {
    res.rank_deficient = true;
    return res;
  }
  const Vector beta_full = qr_full.solve(target);
  const Vector beta_res = qr_restricted.solve(target);
  const double rss_full = (target - design * beta_full).squaredNorm();
  const double rss_res = (target - design.leftCols(p_restricted) * beta_res).squaredNorm();

  const double dof = static_cast<double>(rows - p_full);
  if (rss_full <= 1e-12 * std::max(rss_res, 1e-30)) {
    // unrestricted model fits (near-)perfectly
    res.f_stat = kInf;
    res.p_value = 0.0;
    res.causal = true;
    return res;
  }
  res.f_stat = ((rss_res - rss_full) / max_lag) / (rss_full / dof);
  if (res.f_stat < 0.0) res.f_stat = 0.0;
  res.p_value = f_distribution_sf(res.f_stat, max_lag, dof);
  res.causal = res.p_value < alpha;
  return res;
}

/// Benefit refinement used below the trigger threshold: a detected causal
/// relation raises |benefit| to the floor (sign preserved), never lowers it.
inline double granger_refine(double benefit, const Vector& x, const Vector& q,
                             int max_lag, double trigger = 0.3, double floor = 0.3,
                             double alpha = 0.05) {
  if (std::abs(benefit) >= trigger) return benefit;
  const GrangerResult res = granger_causality(x, q, max_lag, alpha);
  if (!res.causal) return benefit;
  const double sign = benefit < 0.0 ? -1.0 : 1.0;
  return sign * std::max(std::abs(benefit), floor);
}

/// Weighted benefit aggregation rho_{i,k} = sum_n w_n * rho_n.
inline double aggregate_benefit(const Vector& per_objective, const Vector& weights) {
  if (per_objective.size() != weights.size())
    throw std::domain_error("aggregate_benefit: size mismatch");
  if (std::abs(weights.sum() - 1.0) > 1e-9)
    throw std::domain_error("aggregate_benefit: weights must sum to 1");
  return per_objective.dot(weights);
}

}  // namespace hettwin
