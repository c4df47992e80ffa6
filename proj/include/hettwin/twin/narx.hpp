#pragma once

#include "hettwin/integration/normalize.hpp"
#include "hettwin/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <vector>

namespace hettwin {

struct NarxConfig {
  int target_lags = 10;          // R_i
  int exo_lags = 10;             // R_j, shared by every exogenous input
  int hidden = 15;               // units in the single hidden layer
  double learning_rate = 0.001;
  int max_epochs = 2000;
  int patience = 20;             // early-stopping epochs without improvement
  double val_fraction = 0.2;     // chronological tail held out
  std::uint64_t seed = 1;
  bool warn_small_training = true;
};

/// Single-hidden-layer feedforward net over lagged regressors: tanh hidden
/// units, linear output. Trained series-parallel (teacher forced) with
/// gradient steps and early stopping on the validation tail. Inputs and
/// target are standardized internally.
class NarxModel {
 public:
  /// Fits on aligned regular series. `exogenous` may be empty. Throws on
  /// divergence (validation error exceeding 10x its initial value).
  static NarxModel fit(const Vector& target, const std::vector<Vector>& exogenous,
                       const NarxConfig& cfg);

  /// Teacher-forced one-step outputs for rows max_lag..n-1 of the given data.
  Vector one_step(const Vector& target, const std::vector<Vector>& exogenous) const;

  /// Closed-loop forecast: predictions feed back as target lags. Exogenous
  /// futures are used when supplied, otherwise each input holds its last
  /// value. History must cover the maximum lag.
  Vector forecast(const Vector& target_hist, const std::vector<Vector>& exo_hist,
                  int horizon,
                  const std::vector<Vector>* exo_future = nullptr) const;

  int weight_count() const;  // (R_i + sum R_j + 1)*H + (H + 1)
  int max_lag() const;
  int num_exogenous() const { return num_exo_; }
  const NarxConfig& config() const { return cfg_; }
  double validation_mse() const { return val_mse_; }
  double residual_std() const { return residual_std_; }
  const std::vector<double>& training_error_history() const { return train_errors_; }

  nlohmann::json to_json() const;
  static NarxModel from_json(const nlohmann::json& j);

  /// Mean-squared-error loss and analytic gradient at the given flat
  /// parameter vector, on a prepared design. Exposed for gradient checks.
  static std::pair<double, Vector> loss_and_gradient(const Vector& flat_params,
                                                     const Matrix& inputs,
                                                     const Vector& targets,
                                                     int hidden);

 private:
  double predict_row(const Vector& row) const;
  Matrix build_design(const Vector& target, const std::vector<Vector>& exo,
                      Vector* targets) const;

  NarxConfig cfg_;
  int num_exo_ = 0;
  Matrix w1_;        // hidden x (inputs + 1), bias last
  Vector w2_;        // hidden + 1, bias last
  ZScore y_scale_;
  std::vector<ZScore> x_scales_;  // per design column
  double val_mse_ = 0.0;
  double residual_std_ = 0.0;
  std::vector<double> train_errors_;
};

}  // namespace hettwin
