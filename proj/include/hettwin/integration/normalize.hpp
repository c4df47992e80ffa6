#pragma once

#include "hettwin/types.hpp"

#include <cmath>
#include <stdexcept>

namespace hettwin {

/// Z-scoring with the forward parameters retained for the inverse map.
struct ZScore {
  double mean = 0.0;
  double std = 1.0;

  Vector apply(const Vector& x) const { return (x.array() - mean) / std; }
  Vector invert(const Vector& z) const { return z.array() * std + mean; }
};

inline ZScore fit_zscore(const Vector& x) {
  if (x.size() < 1) throw std::domain_error("normalize: empty series");
  ZScore z;
  z.mean = x.mean();
  const double var = (x.array() - z.mean).square().sum() / x.size();
  z.std = std::sqrt(var);
  if (z.std == 0.0) throw std::domain_error("normalize: zero-variance series");
  return z;
}

inline Vector normalize(const Vector& x, ZScore* out_params = nullptr) {
  const ZScore z = fit_zscore(x);
  if (out_params) *out_params = z;
  return z.apply(x);
}

}  // namespace hettwin
