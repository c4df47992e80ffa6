#pragma once

#include "hettwin/types.hpp"

#include <vector>

namespace hettwin {

struct StlConfig {
  std::vector<int> periods = {24, 168};  // hours; applied in the given order
  int seasonal_window = 11;              // Loess window on each cycle-subseries
  int trend_window = 0;                  // 0 -> next odd >= 1.5 * largest period
  int inner_iterations = 2;              // kappa
  int degree = 1;
};

/// Additive decomposition: input = trend + sum(seasonal per period) + residual,
/// exact by construction.
struct STLComponents {
  Vector trend;
  std::vector<Vector> seasonal;  // one component per period, same length as input
  Vector residual;
  std::vector<int> periods;
  int iterations = 0;

  Vector seasonal_total() const {
    Vector s = Vector::Zero(trend.size());
    for (const auto& c : seasonal) s += c;
    return s;
  }
};

/// Iterated cycle-subseries Loess per period (in order), Loess trend, residual
/// as the exact remainder. Initial trend is a centered moving average with
/// linear boundary extension.
STLComponents stl_decompose(const Vector& series, const StlConfig& cfg = {});

}  // namespace hettwin
