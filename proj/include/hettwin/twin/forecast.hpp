#pragma once

#include "hettwin/twin/arima.hpp"
#include "hettwin/twin/narx.hpp"
#include "hettwin/twin/stl.hpp"

#include <memory>
#include <optional>
#include <string>

namespace hettwin {

enum class ModelKind { kArima, kNarx, kStlNarx };

const char* model_kind_name(ModelKind k);

/// One fitted forecasting twin with the bookkeeping needed for delay
/// compensation: the last training-data instant t_last (hours).
class ForecastModel {
 public:
  static ForecastModel fit_arima(const Vector& series, double t_last_h, int p = 2,
                                 int d = 2);
  static ForecastModel fit_narx(const Vector& series,
                                const std::vector<Vector>& exogenous,
                                double t_last_h, const NarxConfig& cfg);
  /// STL on the target; deterministic extrapolation for trend (local linear)
  /// and seasonal (periodic extension of the last fitted cycle); NARX on the
  /// residual, optionally exogenous-driven.
  static ForecastModel fit_stl_narx(const Vector& series,
                                    const std::vector<Vector>& exogenous,
                                    double t_last_h, const StlConfig& stl_cfg,
                                    const NarxConfig& narx_cfg);

  /// Forecast `horizon` steps past the end of the training data. Horizon 0
  /// yields an empty vector.
  Vector forecast(int horizon, const std::vector<Vector>* exo_future = nullptr) const;

  /// Value aligned to t_last + h hours: h = 0 is the last fitted sample.
  double value_at_horizon(int h, const std::vector<Vector>* exo_future = nullptr) const;

  ModelKind kind() const { return kind_; }
  double t_last_hours() const { return t_last_h_; }
  double fit_mse() const { return fit_mse_; }

  nlohmann::json to_json() const;
  static ForecastModel from_json(const nlohmann::json& j);

 private:
  ModelKind kind_ = ModelKind::kArima;
  double t_last_h_ = 0.0;
  double last_value_ = 0.0;
  double fit_mse_ = 0.0;

  std::optional<ArimaModel> arima_;
  std::optional<NarxModel> narx_;
  Vector narx_tail_;                   // target history for closed-loop start
  std::vector<Vector> narx_exo_tail_;

  // STL-NARX state
  std::vector<int> stl_periods_;
  std::vector<Vector> seasonal_cycle_;  // last full cycle per period
  std::vector<int> cycle_phase_;        // phase of the next step per period
  double trend_last_ = 0.0;
  double trend_slope_ = 0.0;
};

}  // namespace hettwin
