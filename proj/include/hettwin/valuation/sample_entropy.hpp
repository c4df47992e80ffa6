#pragma once

#include "hettwin/types.hpp"

#include <cmath>
#include <stdexcept>

namespace hettwin {

struct SampEnConfig {
  int embedding_dim = 2;        // m
  double tolerance_frac = 0.2;  // gamma, as a fraction of the series std
};

/// Sample entropy -ln(Psi_{m+1}/Psi_m): the negative log conditional
/// probability that two length-m templates still match (Chebyshev distance
/// below tolerance) when extended to length m+1. Self-matches excluded; both
/// counts run over the same template set so the ratio is a conditional
/// probability. Returns +inf when no template pair survives extension.
template <typename Derived>
double sample_entropy(const Eigen::MatrixBase<Derived>& series,
                      const SampEnConfig& cfg = {}) {
  const Index n = series.size();
  const int m = cfg.embedding_dim;
  if (m < 1) throw std::domain_error("sample_entropy: embedding_dim must be >= 1");
  if (!(cfg.tolerance_frac > 0.0))
    throw std::domain_error("sample_entropy: tolerance must be positive");
  if (n < m + 2) throw std::domain_error("sample_entropy: series too short");

  const Vector x = series.template cast<double>();
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / n;
  const double sd = std::sqrt(var);
  if (sd == 0.0) return 0.0;  // constant series: every template matches
  const double tol = cfg.tolerance_frac * sd;

  // templates of length m+1 start at u in [0, n-m-1]; length-m matches are
  // counted over the same starts
  const Index count = n - m;
  std::int64_t match_m = 0, match_m1 = 0;
  for (Index u = 0; u < count; ++u) {
    for (Index v = u + 1; v < count; ++v) {
      double d = 0.0;
      for (int l = 0; l < m; ++l)
        d = std::max(d, std::abs(x[u + l] - x[v + l]));
      if (d < tol) {
        ++match_m;
        if (std::max(d, std::abs(x[u + m] - x[v + m])) < tol) ++match_m1;
      }
    }
  }
  if (match_m == 0 || match_m1 == 0) return kInf;
  return -std::log(static_cast<double>(match_m1) / static_cast<double>(match_m));
}

}  // namespace hettwin
