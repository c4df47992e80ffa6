#pragma once

#include "hettwin/types.hpp"

#include <string>

namespace hettwin {

/// Timestamped samples of one network attribute of one entity.
/// Timestamps are seconds; strictly increasing within a series.
struct AttributeSeries {
  std::string entity_id;
  std::string attribute;
  Vector timestamps;  // s, device-local unless synchronized
  Vector values;
  double nominal_interval_s = 0.0;  // sampling cadence the device aims for

  Index size() const { return values.size(); }
  bool empty() const { return values.size() == 0; }
};

inline bool timestamps_increasing(const Vector& t) {
  for (Index i = 1; i < t.size(); ++i)
    if (t[i] <= t[i - 1]) return false;
  return true;
}

}  // namespace hettwin
