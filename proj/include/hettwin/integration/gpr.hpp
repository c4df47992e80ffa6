#pragma once

#include "hettwin/types.hpp"

namespace hettwin {

struct GprConfig {
  double length_scale = 0.0;  // 0 -> median inter-sample spacing
  double signal_var = 0.0;    // kernel variance; 0 -> sample variance of y
  double noise_var = 0.0;     // sigma_f^2
  double jitter = 1e-10;      // relative diagonal jitter for the solve
};

/// Resampled values on a target grid with per-point posterior variance.
struct ResampledSeries {
  Vector target_instants;
  Vector mean;
  Vector variance;  // diagonal of the posterior covariance, clamped at 0
  double length_scale = 0.0;
  double signal_var = 0.0;
  double noise_var = 0.0;
};

/// Squared-exponential GP posterior: mean via a Cholesky solve with jitter
/// (never an explicit inverse), variance as the standard posterior covariance
/// diagonal. Observations are centered internally; the mean is added back.
ResampledSeries gpr_resample(const Vector& sample_instants, const Vector& values,
                             const Vector& target_instants, GprConfig cfg = {});

}  // namespace hettwin
