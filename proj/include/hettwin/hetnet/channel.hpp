#pragma once

#include "hettwin/hetnet/scenario.hpp"
#include "hettwin/types.hpp"

#include <cmath>
#include <stdexcept>

namespace hettwin {

/// Distance-dependent path loss in dB. Distinct models per tier:
/// macro 15.3 + 37.6 log10(D), small 8.46 + 20 log10(D) + 0.7 D.
inline double path_loss_db(Tier tier, double distance_m,
                           const PathLossParams& p = {}) {
  if (!(distance_m > 0.0))
    throw std::domain_error("path_loss: distance must be positive");
  if (tier == Tier::kMacro)
    return p.macro_a + p.macro_b * std::log10(distance_m);
  return p.small_a + p.small_b * std::log10(distance_m) + p.small_c * distance_m;
}

/// Shannon rate in bits/s for a linear SINR.
inline double data_rate_bps(double sinr, double bandwidth_hz) {
  if (sinr < 0.0) throw std::domain_error("data_rate: sinr must be >= 0");
  return bandwidth_hz * std::log2(1.0 + sinr);
}

/// SINR from explicit powers and gains, all linear. `signal_w` is the serving
/// link received power, `interference_w` the summed co-channel received power.
inline double sinr_linear(double signal_w, double interference_w, double noise_w) {
  return signal_w / (interference_w + noise_w);
}

/// Satisfaction ratio S = achieved/required. For smaller-is-better metrics
/// (delay, loss) the ratio is required/achieved so S >= 1 always reads
/// "satisfied". An achieved value of zero on an inverted metric saturates.
inline double qos_satisfaction(QosMetric metric, double achieved, double required) {
  if (!(required > 0.0))
    throw std::domain_error("qos_satisfaction: requirement must be positive");
  if (metric == QosMetric::kThroughput) return achieved / required;
  if (achieved <= 0.0) return kInf;
  return required / achieved;
}

}  // namespace hettwin
