#pragma once

#include "hettwin/types.hpp"

#include <nlohmann/json_fwd.hpp>

namespace hettwin {

/// ARIMA(p, d, 0) fitted by conditional least squares: difference d times,
/// ordinary least squares on the AR lags, integrate forecasts back.
class ArimaModel {
 public:
  static ArimaModel fit(const Vector& series, int p = 2, int d = 2);

  /// Recursive multi-step forecast continuing the fitted series.
  Vector forecast(int horizon) const;

  const Vector& coefficients() const { return phi_; }  // AR coefficients
  double intercept() const { return intercept_; }
  int p() const { return static_cast<int>(phi_.size()); }
  int d() const { return d_; }

  nlohmann::json to_json() const;
  static ArimaModel from_json(const nlohmann::json& j);

 private:
  Vector phi_;
  double intercept_ = 0.0;
  int d_ = 0;
  Vector diff_tail_;            // last p values of the differenced series
  std::vector<double> level_tails_;  // last value at each integration level
};

/// Mean squared error between two equally long series.
inline double mse(const Vector& forecast, const Vector& truth) {
  if (forecast.size() != truth.size()) throw std::domain_error("mse: length mismatch");
  if (forecast.size() == 0) throw std::domain_error("mse: empty input");
  return (forecast - truth).squaredNorm() / forecast.size();
}

}  // namespace hettwin
