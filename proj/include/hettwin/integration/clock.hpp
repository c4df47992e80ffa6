#pragma once

#include "hettwin/hetnet/trace.hpp"
#include "hettwin/series.hpp"
#include "hettwin/types.hpp"

#include <stdexcept>

namespace hettwin {

/// Estimated affine clock error e(t) = skew * t + offset of one device
/// relative to the control center.
struct ClockEstimate {
  double skew = 0.0;
  double offset_s = 0.0;

  double error_at(double t) const { return skew * t + offset_s; }

  /// Device-local stamp for a reference-time instant.
  double corrupt(double t_ref) const { return (1.0 + skew) * t_ref + offset_s; }

  /// Reference-time instant for a device-local stamp: the affine correction
  /// solved exactly, not the first-order t - e(t) approximation.
  double compensate(double t_dev) const { return (t_dev - offset_s) / (1.0 + skew); }
};

/// Estimates skew from the span of `count` device timestamps nominally
/// `interval_s` apart, and offset from one two-way timestamped exchange.
/// The raw two-way offset measures the clock error at the exchange midpoint;
/// the skew accumulated up to that midpoint is removed so the reported offset
/// is the t = 0 intercept.
inline ClockEstimate estimate_clock(const Vector& device_timestamps,
                                    double interval_s, const ExchangeRecord& ex) {
  const Index n = device_timestamps.size();
  if (n < 2) throw std::domain_error("estimate_clock: need at least 2 timestamps");
  if (!(interval_s > 0.0))
    throw std::domain_error("estimate_clock: nominal interval must be positive");
  const double span = device_timestamps[n - 1] - device_timestamps[0];
  if (span <= 0.0)
    throw std::domain_error("estimate_clock: degenerate timestamp span");

  ClockEstimate est;
  est.skew = span / (interval_s * static_cast<double>(n - 1)) - 1.0;

  // two-way measurement: mean of (device - control) stamps over both legs
  const double measured =
      ((ex.t_dev_rx - ex.t_con_rx) + (ex.t_dev_tx - ex.t_con_tx)) / 2.0;
  // device-side midpoint in device time; subtract the skew accumulated there
  const double t_dev_mid = (ex.t_dev_rx + ex.t_dev_tx) / 2.0;
  est.offset_s = measured * (1.0 + est.skew) - est.skew * t_dev_mid;
  return est;
}

/// Rewrites the series timestamps into reference time; values untouched.
inline AttributeSeries compensate(const AttributeSeries& series,
                                  const ClockEstimate& est) {
  AttributeSeries out = series;
  for (Index i = 0; i < out.timestamps.size(); ++i)
    out.timestamps[i] = est.compensate(series.timestamps[i]);
  return out;
}

}  // namespace hettwin
