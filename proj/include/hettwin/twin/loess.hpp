#pragma once

#include "hettwin/types.hpp"

namespace hettwin {

/// Locally weighted polynomial smoothing (tricube weights) on a uniform grid.
/// `window` points nearest each index are fitted with the given degree and
/// evaluated at that index. Windows larger than the series clamp (sets
/// *clamped when provided).
Vector loess_smooth(const Vector& y, int window, int degree = 1,
                    bool* clamped = nullptr);

/// Local polynomial fit over the last `window` points, evaluated `steps`
/// beyond the final index. Used for trend extrapolation.
double loess_extrapolate(const Vector& y, int window, int degree, double steps);

}  // namespace hettwin
