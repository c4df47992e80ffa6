#include "hettwin/twin/forecast.hpp"

#include "hettwin/twin/loess.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace hettwin {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Loess

namespace {

int make_odd(int w) { return w % 2 == 0 ? w + 1 : w; }

/// Weighted polynomial fit of (xs, ys, ws) evaluated at x = 0. xs are offsets
/// from the query point, which keeps the Vandermonde well conditioned.
double wpoly_at_zero(const Vector& xs, const Vector& ys, const Vector& ws, int degree) {
  const Index n = xs.size();
  Matrix v(n, degree + 1);
  for (Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (int d = 0; d <= degree; ++d) {
      v(i, d) = p * ws[i];
      p *= xs[i];
    }
  }
  const Vector b = ys.cwiseProduct(ws);
  const Vector coef = v.colPivHouseholderQr().solve(b);
  return coef[0];
}

double tricube(double u) {
  const double a = 1.0 - u * u * u;
  return a > 0.0 ? a * a * a : 0.0;
}

}  // namespace

Vector loess_smooth(const Vector& y, int window, int degree, bool* clamped) {
  const Index n = y.size();
  if (n == 0) return y;
  if (clamped) *clamped = false;
  if (window > n) {
    window = static_cast<int>(n);
    if (clamped) *clamped = true;
  }
  window = make_odd(std::max(window, degree + 2));
  if (window > n) window = static_cast<int>(n);  // tiny series: single window
  const int half = window / 2;

  Vector out(n);
  Vector xs(window), ys(window), ws(window);
  for (Index i = 0; i < n; ++i) {
    Index lo = i - half;
    if (lo < 0) lo = 0;
    if (lo + window > n) lo = n - window;
    double dmax = 0.0;
    for (int k = 0; k < window; ++k)
      dmax = std::max(dmax, std::abs(static_cast<double>(lo + k) - i));
    if (dmax == 0.0) dmax = 1.0;
    for (int k = 0; k < window; ++k) {
      xs[k] = static_cast<double>(lo + k) - i;
      ys[k] = y[lo + k];
      // never let every weight vanish: floor at the far edge
      ws[k] = std::max(tricube(std::abs(xs[k]) / (dmax * (1.0 + 1e-9))), 1e-12);
    }
    out[i] = wpoly_at_zero(xs, ys, ws, degree);
  }
  return out;
}

double loess_extrapolate(const Vector& y, int window, int degree, double steps) {
  const Index n = y.size();
  if (n == 0) throw std::domain_error("loess_extrapolate: empty series");
  window = std::min<Index>(make_odd(std::max(window, degree + 2)), n);
  const Index lo = n - window;
  Vector xs(window), ys(window), ws(window);
  const double query = static_cast<double>(n - 1) + steps;
  double dmax = 0.0;
  for (int k = 0; k < window; ++k)
    dmax = std::max(dmax, std::abs(static_cast<double>(lo + k) - query));
  if (dmax == 0.0) dmax = 1.0;
  for (int k = 0; k < window; ++k) {
    xs[k] = static_cast<double>(lo + k) - query;
    ys[k] = y[lo + k];
    ws[k] = std::max(tricube(std::abs(xs[k]) / (dmax * (1.0 + 1e-9))), 1e-12);
  }
  return wpoly_at_zero(xs, ys, ws, degree);
}

// ---------------------------------------------------------------------------
// STL

namespace {

/// Centered moving average with zero gain at the period frequency and every
/// harmonic: plain p-term MA for odd p, the classic 2xp MA (half weights at
/// the ends) for even p. The series is extended past both ends with a
/// least-squares line over exactly two cycles, so a linear trend plus any
/// p-periodic signal passes through as the trend alone.
Vector period_null_ma(const Vector& x, int period) {
  const Index n = x.size();
  period = std::max(period, 2);

  // boundary lines from consecutive cycle means: a p-periodic component has
  // identical cycle means, so it cancels from both the slope and the level
  auto boundary_line = [&](bool front) {
    double icept = x.mean(), slope = 0.0, center = (n - 1) / 2.0;
    if (n >= 2 * period) {
      const Index a = front ? 0 : n - 2 * period;
      const double mean1 = x.segment(a, period).mean();
      const double mean2 = x.segment(a + period, period).mean();
      slope = (mean2 - mean1) / period;
      icept = mean2;
      center = a + period + (period - 1) / 2.0;  // center of the outer cycle
    }
    return std::tuple<double, double, double>{icept, slope, center};
  };
  const auto [b0, m0, c0] = boundary_line(true);
  const auto [b1, m1, c1] = boundary_line(false);

  auto value = [&](Index i) -> double {
    if (i < 0) return b0 + m0 * (static_cast<double>(i) - c0);
    if (i >= n) return b1 + m1 * (static_cast<double>(i) - c1);
    return x[i];
  };

  const bool even = period % 2 == 0;
  const int half = even ? period / 2 : (period - 1) / 2;
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = -half; k <= half; ++k) {
      double w = 1.0;
      if (even && (k == -half || k == half)) w = 0.5;
      acc += w * value(i + k);
    }
    out[i] = acc / period;
  }
  return out;
}

/// One-period STL pass; returns {seasonal, trend}.
std::pair<Vector, Vector> stl_single_period(const Vector& x, int period,
                                            const StlConfig& cfg) {
  const Index n = x.size();
  const int trend_window =
      cfg.trend_window > 0 ? cfg.trend_window
                           : make_odd(static_cast<int>(std::ceil(1.5 * period)));

  Vector trend = period_null_ma(x, period);
  Vector seasonal = Vector::Zero(n);
  for (int it = 0; it < std::max(cfg.inner_iterations, 1); ++it) {
    const Vector detrended = x - trend;
    // cycle-subseries smoothing
    Vector raw = Vector::Zero(n);
    for (int phase = 0; phase < period; ++phase) {
      const Index count = (n - phase + period - 1) / period;
      if (count == 0) continue;
      Vector sub(count);
      for (Index c = 0; c < count; ++c) sub[c] = detrended[phase + c * period];
      const Vector smooth =
          count >= 2 ? loess_smooth(sub, cfg.seasonal_window, cfg.degree)
                     : sub;
      for (Index c = 0; c < count; ++c) raw[phase + c * period] = smooth[c];
    }
    // remove leakage of low-frequency content into the seasonal
    seasonal = raw - period_null_ma(raw, period);
    // zero mean over each cycle so the seasonal carries no level
    for (Index c = 0; c < n; c += period) {
      const Index len = std::min<Index>(period, n - c);
      seasonal.segment(c, len).array() -= seasonal.segment(c, len).mean();
    }
    trend = loess_smooth(x - seasonal, trend_window, cfg.degree);
  }
  return {seasonal, trend};
}

}  // namespace

STLComponents stl_decompose(const Vector& series, const StlConfig& cfg) {
  if (cfg.periods.empty()) throw std::domain_error("stl_decompose: no periods");
  const Index n = series.size();
  const int max_period = *std::max_element(cfg.periods.begin(), cfg.periods.end());
  if (n < 2 * max_period)
    throw std::domain_error("stl_decompose: series shorter than twice the period");

  STLComponents out;
  out.periods = cfg.periods;
  out.iterations = cfg.inner_iterations;
  Vector work = series;
  Vector trend;
  for (int p : cfg.periods) {
    auto [seasonal, tr] = stl_single_period(work, p, cfg);
    out.seasonal.push_back(seasonal);
    work -= seasonal;
    trend = tr;
  }
  out.trend = trend;
  out.residual = series - out.trend - out.seasonal_total();
  return out;
}

// ---------------------------------------------------------------------------
// NARX

namespace {

struct FlatParams {
  static Vector pack(const Matrix& w1, const Vector& w2) {
    Vector flat(w1.size() + w2.size());
    flat.head(w1.size()) = Eigen::Map<const Vector>(w1.data(), w1.size());
    flat.tail(w2.size()) = w2;
    return flat;
  }
  static void unpack(const Vector& flat, int hidden, int in_dim, Matrix& w1,
                     Vector& w2) {
    w1 = Eigen::Map<const Matrix>(flat.data(), hidden, in_dim + 1);
    w2 = flat.tail(hidden + 1);
  }
};

}  // namespace

Matrix NarxModel::build_design(const Vector& target, const std::vector<Vector>& exo,
                               Vector* targets) const {
  const int ri = cfg_.target_lags;
  const int rj = cfg_.exo_lags;
  const int lag = max_lag();
  const Index n = target.size();
  if (n <= lag) throw std::domain_error("narx: series shorter than max lag");
  for (const auto& e : exo)
    if (e.size() != n) throw std::domain_error("narx: exogenous length mismatch");

  const Index rows = n - lag;
  const int dims = ri + static_cast<int>(exo.size()) * rj;
  Matrix design(rows, dims);
  if (targets) targets->resize(rows);
  for (Index r = 0; r < rows; ++r) {
    const Index t = r + lag;
    int c = 0;
    for (int u = 1; u <= ri; ++u) design(r, c++) = target[t - u];
    for (const auto& e : exo)
      for (int v = 1; v <= rj; ++v) design(r, c++) = e[t - v];
    if (targets) (*targets)[r] = target[t];
  }
  return design;
}

int NarxModel::max_lag() const {
  return num_exo_ > 0 ? std::max(cfg_.target_lags, cfg_.exo_lags) : cfg_.target_lags;
}

int NarxModel::weight_count() const {
  const int d = cfg_.target_lags + num_exo_ * cfg_.exo_lags;
  return (d + 1) * cfg_.hidden + (cfg_.hidden + 1);
}

std::pair<double, Vector> NarxModel::loss_and_gradient(const Vector& flat_params,
                                                       const Matrix& inputs,
                                                       const Vector& targets,
                                                       int hidden) {
  const int in_dim = static_cast<int>(inputs.cols());
  const Index rows = inputs.rows();
  Matrix w1;
  Vector w2;
  FlatParams::unpack(flat_params, hidden, in_dim, w1, w2);

  // forward
  Matrix xb(rows, in_dim + 1);
  xb.leftCols(in_dim) = inputs;
  xb.col(in_dim).setOnes();
  Matrix a = xb * w1.transpose();          // rows x hidden
  Matrix z = a.array().tanh();
  Vector yhat = z * w2.head(hidden) + Vector::Constant(rows, w2[hidden]);
  const Vector err = yhat - targets;
  const double loss = 0.5 * err.squaredNorm() / rows;

  // backward
  Vector g2(hidden + 1);
  g2.head(hidden) = z.transpose() * err / rows;
  g2[hidden] = err.sum() / rows;
  Matrix dz = (err * w2.head(hidden).transpose()).cwiseProduct(
      (1.0 - z.array().square()).matrix());
  Matrix g1 = dz.transpose() * xb / rows;  // hidden x (in_dim+1)

  Vector grad(flat_params.size());
  grad.head(g1.size()) = Eigen::Map<const Vector>(g1.data(), g1.size());
  grad.tail(hidden + 1) = g2;
  return {loss, grad};
}

NarxModel NarxModel::fit(const Vector& target, const std::vector<Vector>& exogenous,
                         const NarxConfig& cfg) {
  NarxModel model;
  model.cfg_ = cfg;
  model.num_exo_ = static_cast<int>(exogenous.size());

  Vector y_raw;
  Matrix x_raw = model.build_design(target, exogenous, &y_raw);
  const Index rows = x_raw.rows();
  const int dims = static_cast<int>(x_raw.cols());
  if (rows < 8) throw std::domain_error("narx: too few training rows");

  // standardize each column and the target; constant columns pass through
  model.x_scales_.resize(dims);
  Matrix x(rows, dims);
  for (int c = 0; c < dims; ++c) {
    ZScore z;
    z.mean = x_raw.col(c).mean();
    const double var = (x_raw.col(c).array() - z.mean).square().sum() / rows;
    z.std = var > 0.0 ? std::sqrt(var) : 1.0;
    model.x_scales_[c] = z;
    x.col(c) = (x_raw.col(c).array() - z.mean) / z.std;
  }
  {
    ZScore z;
    z.mean = y_raw.mean();
    const double var = (y_raw.array() - z.mean).square().sum() / rows;
    z.std = var > 0.0 ? std::sqrt(var) : 1.0;
    model.y_scale_ = z;
    if (var == 0.0) {
      // constant target: the exact model is the constant itself
      model.w1_ = Matrix::Zero(cfg.hidden, dims + 1);
      model.w2_ = Vector::Zero(cfg.hidden + 1);
      model.val_mse_ = 0.0;
      model.residual_std_ = 0.0;
      return model;
    }
  }
  Vector y = (y_raw.array() - model.y_scale_.mean) / model.y_scale_.std;

  const Index val_rows = std::max<Index>(1, static_cast<Index>(rows * cfg.val_fraction));
  const Index train_rows = rows - val_rows;
  if (train_rows < 4) throw std::domain_error("narx: not enough data for validation split");
  const Matrix x_train = x.topRows(train_rows);
  const Vector y_train = y.head(train_rows);
  const Matrix x_val = x.bottomRows(val_rows);
  const Vector y_val = y.tail(val_rows);

  // Xavier-style init
  std::mt19937_64 rng(cfg.seed);
  const double bound1 = std::sqrt(6.0 / (dims + 1 + cfg.hidden));
  std::uniform_real_distribution<double> u1(-bound1, bound1);
  Matrix w1(cfg.hidden, dims + 1);
  for (Index i = 0; i < w1.size(); ++i) w1.data()[i] = u1(rng);
  const double bound2 = std::sqrt(6.0 / (cfg.hidden + 2));
  std::uniform_real_distribution<double> u2(-bound2, bound2);
  Vector w2(cfg.hidden + 1);
  for (Index i = 0; i < w2.size(); ++i) w2[i] = u2(rng);

  Vector params = FlatParams::pack(w1, w2);

  auto val_mse = [&](const Vector& p) {
    Matrix vw1;
    Vector vw2;
    FlatParams::unpack(p, cfg.hidden, dims, vw1, vw2);
    Matrix xb(val_rows, dims + 1);
    xb.leftCols(dims) = x_val;
    xb.col(dims).setOnes();
    Matrix z = (xb * vw1.transpose()).array().tanh();
    Vector yhat = z * vw2.head(cfg.hidden) + Vector::Constant(val_rows, vw2[cfg.hidden]);
    return (yhat - y_val).squaredNorm() / val_rows;
  };

  // Adam, full batch
  Vector m = Vector::Zero(params.size());
  Vector v = Vector::Zero(params.size());
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double best_val = val_mse(params);
  const double initial_val = best_val;
  Vector best_params = params;
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto [loss, grad] = loss_and_gradient(params, x_train, y_train, cfg.hidden);
    model.train_errors_.push_back(loss);
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    const double mc = 1.0 - std::pow(b1, epoch);
    const double vc = 1.0 - std::pow(b2, epoch);
    params -= (cfg.learning_rate / mc) *
              (m.array() / ((v.array() / vc).sqrt() + eps)).matrix();

    const double vm = val_mse(params);
    if (vm < best_val * (1.0 - 1e-6)) {
      best_val = vm;
      best_params = params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
    if (vm > 10.0 * initial_val && epoch > 10)
      throw std::runtime_error(
          "narx: training diverged (validation error " + std::to_string(vm) +
          " vs initial " + std::to_string(initial_val) + ")");
  }
  FlatParams::unpack(best_params, cfg.hidden, dims, model.w1_, model.w2_);
  model.val_mse_ = best_val * model.y_scale_.std * model.y_scale_.std;

  // residual spread on the full data, original units
  Vector fitted = model.one_step(target, exogenous);
  Vector truth = y_raw;
  model.residual_std_ = std::sqrt((fitted - truth).squaredNorm() / rows);
  return model;
}

double NarxModel::predict_row(const Vector& row) const {
  const int dims = static_cast<int>(row.size());
  Vector xs(dims + 1);
  for (int c = 0; c < dims; ++c)
    xs[c] = (row[c] - x_scales_[c].mean) / x_scales_[c].std;
  xs[dims] = 1.0;
  const Vector z = (w1_ * xs).array().tanh();
  const double yhat = w2_.head(z.size()).dot(z) + w2_[z.size()];
  return yhat * y_scale_.std + y_scale_.mean;
}

Vector NarxModel::one_step(const Vector& target, const std::vector<Vector>& exo) const {
  Vector dummy;
  Matrix design = build_design(target, exo, &dummy);
  Vector out(design.rows());
  for (Index r = 0; r < design.rows(); ++r) out[r] = predict_row(design.row(r));
  return out;
}

Vector NarxModel::forecast(const Vector& target_hist,
                           const std::vector<Vector>& exo_hist, int horizon,
                           const std::vector<Vector>* exo_future) const {
  if (horizon < 0) throw std::domain_error("narx: negative horizon");
  if (horizon == 0) return Vector();
  const int lag = max_lag();
  if (target_hist.size() < lag)
    throw std::domain_error("narx: history shorter than max lag");
  if (static_cast<int>(exo_hist.size()) != num_exo_)
    throw std::domain_error("narx: exogenous history count mismatch");
  for (const auto& e : exo_hist)
    if (e.size() < lag) throw std::domain_error("narx: exogenous history too short");

  const int ri = cfg_.target_lags;
  const int rj = cfg_.exo_lags;
  std::vector<double> ybuf(target_hist.data() + target_hist.size() - lag,
                           target_hist.data() + target_hist.size());
  std::vector<std::vector<double>> ebuf(num_exo_);
  for (int e = 0; e < num_exo_; ++e)
    ebuf[e].assign(exo_hist[e].data() + exo_hist[e].size() - lag,
                   exo_hist[e].data() + exo_hist[e].size());

  Vector out(horizon);
  const int dims = ri + num_exo_ * rj;
  Vector row(dims);
  for (int h = 0; h < horizon; ++h) {
    int c = 0;
    for (int u = 1; u <= ri; ++u) row[c++] = ybuf[ybuf.size() - u];
    for (int e = 0; e < num_exo_; ++e)
      for (int v = 1; v <= rj; ++v) row[c++] = ebuf[e][ebuf[e].size() - v];
    const double yhat = predict_row(row);
    out[h] = yhat;
    ybuf.push_back(yhat);
    for (int e = 0; e < num_exo_; ++e) {
      double next = ebuf[e].back();  // hold last when no future is given
      if (exo_future && e < static_cast<int>(exo_future->size()) &&
          h < (*exo_future)[e].size())
        next = (*exo_future)[e][h];
      ebuf[e].push_back(next);
    }
  }
  return out;
}

json NarxModel::to_json() const {
  json j;
  j["target_lags"] = cfg_.target_lags;
  j["exo_lags"] = cfg_.exo_lags;
  j["hidden"] = cfg_.hidden;
  j["learning_rate"] = cfg_.learning_rate;
  j["num_exogenous"] = num_exo_;
  j["w1"] = std::vector<double>(w1_.data(), w1_.data() + w1_.size());
  j["w2"] = std::vector<double>(w2_.data(), w2_.data() + w2_.size());
  j["y_scale"] = {y_scale_.mean, y_scale_.std};
  json xs = json::array();
  for (const auto& z : x_scales_) xs.push_back({z.mean, z.std});
  j["x_scales"] = xs;
  j["val_mse"] = val_mse_;
  j["residual_std"] = residual_std_;
  return j;
}

NarxModel NarxModel::from_json(const json& j) {
  NarxModel m;
  m.cfg_.target_lags = j.at("target_lags").get<int>();
  m.cfg_.exo_lags = j.at("exo_lags").get<int>();
  m.cfg_.hidden = j.at("hidden").get<int>();
  m.cfg_.learning_rate = j.value("learning_rate", 0.001);
  m.num_exo_ = j.at("num_exogenous").get<int>();
  const auto w1 = j.at("w1").get<std::vector<double>>();
  const int dims = m.cfg_.target_lags + m.num_exo_ * m.cfg_.exo_lags;
  m.w1_ = Eigen::Map<const Matrix>(w1.data(), m.cfg_.hidden, dims + 1);
  const auto w2 = j.at("w2").get<std::vector<double>>();
  m.w2_ = Eigen::Map<const Vector>(w2.data(), static_cast<Index>(w2.size()));
  m.y_scale_ = {j.at("y_scale")[0].get<double>(), j.at("y_scale")[1].get<double>()};
  for (const auto& z : j.at("x_scales"))
    m.x_scales_.push_back({z[0].get<double>(), z[1].get<double>()});
  m.val_mse_ = j.value("val_mse", 0.0);
  m.residual_std_ = j.value("residual_std", 0.0);
  return m;
}

// ---------------------------------------------------------------------------
// ARIMA

ArimaModel ArimaModel::fit(const Vector& series, int p, int d) {
  if (p < 1) throw std::domain_error("arima: p must be >= 1");
  if (d < 0) throw std::domain_error("arima: d must be >= 0");
  if (series.size() < 30) throw std::domain_error("arima: need at least 30 samples");

  ArimaModel m;
  m.d_ = d;
  Vector w = series;
  for (int k = 0; k < d; ++k) {
    m.level_tails_.push_back(w[w.size() - 1]);
    Vector next(w.size() - 1);
    for (Index i = 0; i + 1 < w.size(); ++i) next[i] = w[i + 1] - w[i];
    w = next;
  }
  const Index n = w.size();
  if (n < p + 5) throw std::domain_error("arima: series too short after differencing");

  const double wmean = w.mean();
  const double wvar = (w.array() - wmean).square().sum() / n;
  if (wvar < 1e-20 * std::max(1.0, wmean * wmean)) {
    // differenced series is (numerically) constant
    m.phi_ = Vector::Zero(p);
    m.intercept_ = wmean;
  } else {
    const Index rows = n - p;
    Matrix design(rows, p + 1);
    Vector target(rows);
    for (Index r = 0; r < rows; ++r) {
      design(r, 0) = 1.0;
      for (int l = 1; l <= p; ++l) design(r, l) = w[r + p - l];
      target[r] = w[r + p];
    }
    const Vector beta = design.colPivHouseholderQr().solve(target);
    m.intercept_ = beta[0];
    m.phi_ = beta.tail(p);

    // stationarity: companion-matrix spectral radius must stay below 1
    Matrix companion = Matrix::Zero(p, p);
    companion.row(0) = m.phi_.transpose();
    for (int i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    const auto eigs = companion.eigenvalues();
    double radius = 0.0;
    for (Index i = 0; i < eigs.size(); ++i)
      radius = std::max(radius, std::abs(eigs[i]));
    if (radius >= 1.0 + 1e-8)
      throw std::runtime_error("arima: unstable AR fit (spectral radius " +
                               std::to_string(radius) + ")");
  }
  m.diff_tail_ = w.tail(p);
  return m;
}

Vector ArimaModel::forecast(int horizon) const {
  if (horizon < 0) throw std::domain_error("arima: negative horizon");
  const int p = static_cast<int>(phi_.size());
  std::vector<double> buf(diff_tail_.data(), diff_tail_.data() + diff_tail_.size());
  Vector w(horizon);
  for (int h = 0; h < horizon; ++h) {
    double acc = intercept_;
    for (int l = 1; l <= p; ++l) acc += phi_[l - 1] * buf[buf.size() - l];
    buf.push_back(acc);
    w[h] = acc;
  }
  // integrate back through the stored levels (innermost difference first)
  Vector x = w;
  for (int k = d_ - 1; k >= 0; --k) {
    double level = level_tails_[k];
    for (int h = 0; h < horizon; ++h) {
      level += x[h];
      x[h] = level;
    }
  }
  return x;
}

json ArimaModel::to_json() const {
  json j;
  j["p"] = static_cast<int>(phi_.size());
  j["d"] = d_;
  j["phi"] = std::vector<double>(phi_.data(), phi_.data() + phi_.size());
  j["intercept"] = intercept_;
  j["diff_tail"] = std::vector<double>(diff_tail_.data(), diff_tail_.data() + diff_tail_.size());
  j["level_tails"] = level_tails_;
  return j;
}

ArimaModel ArimaModel::from_json(const json& j) {
  ArimaModel m;
  const auto phi = j.at("phi").get<std::vector<double>>();
  m.phi_ = Eigen::Map<const Vector>(phi.data(), static_cast<Index>(phi.size()));
  m.d_ = j.at("d").get<int>();
  m.intercept_ = j.at("intercept").get<double>();
  const auto tail = j.at("diff_tail").get<std::vector<double>>();
  m.diff_tail_ = Eigen::Map<const Vector>(tail.data(), static_cast<Index>(tail.size()));
  m.level_tails_ = j.at("level_tails").get<std::vector<double>>();
  return m;
}

// ---------------------------------------------------------------------------
// ForecastModel

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::kArima: return "arima";
    case ModelKind::kNarx: return "narx";
    case ModelKind::kStlNarx: return "stl_narx";
  }
  return "?";
}

ForecastModel ForecastModel::fit_arima(const Vector& series, double t_last_h, int p,
                                       int d) {
  ForecastModel m;
  m.kind_ = ModelKind::kArima;
  m.t_last_h_ = t_last_h;
  m.last_value_ = series[series.size() - 1];
  m.arima_ = ArimaModel::fit(series, p, d);
  return m;
}

ForecastModel ForecastModel::fit_narx(const Vector& series,
                                      const std::vector<Vector>& exogenous,
                                      double t_last_h, const NarxConfig& cfg) {
  ForecastModel m;
  m.kind_ = ModelKind::kNarx;
  m.t_last_h_ = t_last_h;
  m.last_value_ = series[series.size() - 1];
  m.narx_ = NarxModel::fit(series, exogenous, cfg);
  m.fit_mse_ = m.narx_->validation_mse();
  const int keep = std::max(m.narx_->max_lag(), 1);
  m.narx_tail_ = series.tail(std::min<Index>(keep + 8, series.size()));
  for (const auto& e : exogenous)
    m.narx_exo_tail_.push_back(e.tail(std::min<Index>(keep + 8, e.size())));
  return m;
}

ForecastModel ForecastModel::fit_stl_narx(const Vector& series,
                                          const std::vector<Vector>& exogenous,
                                          double t_last_h, const StlConfig& stl_cfg,
                                          const NarxConfig& narx_cfg) {
  ForecastModel m;
  m.kind_ = ModelKind::kStlNarx;
  m.t_last_h_ = t_last_h;
  m.last_value_ = series[series.size() - 1];

  const STLComponents stl = stl_decompose(series, stl_cfg);
  m.stl_periods_ = stl.periods;
  const Index n = series.size();
  for (size_t k = 0; k < stl.seasonal.size(); ++k) {
    const int p = stl.periods[k];
    // continuation cycle: mean of the last few full cycles, phase-aligned to
    // the end of the series; steadier than the single trailing cycle
    const int cycles = std::min<int>(3, static_cast<int>(n / p));
    Vector cyc = Vector::Zero(p);
    for (int c = 1; c <= cycles; ++c) cyc += stl.seasonal[k].segment(n - c * p, p);
    cyc /= cycles;
    m.seasonal_cycle_.push_back(cyc);
    m.cycle_phase_.push_back(0);  // next forecast step continues the cycle
  }
  // trend continuation: linear fit over the last two cycles, long enough for
  // any leftover cycle-scale wiggle in the trend to average out of the slope
  const Index fit_n = std::min<Index>(std::max(2 * stl.periods.back(), 8), n);
  const Vector tail = stl.trend.tail(fit_n);
  const double tbar = (fit_n - 1) / 2.0;
  double sxx = 0.0, sxy = 0.0;
  const double ybar = tail.mean();
  for (Index k = 0; k < fit_n; ++k) {
    sxx += (k - tbar) * (k - tbar);
    sxy += (k - tbar) * (tail[k] - ybar);
  }
  m.trend_slope_ = sxx > 0.0 ? sxy / sxx : 0.0;
  // boundary level from the same fit; one-sided smoothing wiggle drops out
  m.trend_last_ = ybar + m.trend_slope_ * (fit_n - 1 - tbar);

  m.narx_ = NarxModel::fit(stl.residual, exogenous, narx_cfg);
  m.fit_mse_ = m.narx_->validation_mse();
  const int keep = std::max(m.narx_->max_lag(), 1);
  m.narx_tail_ = stl.residual.tail(std::min<Index>(keep + 8, n));
  for (const auto& e : exogenous)
    m.narx_exo_tail_.push_back(e.tail(std::min<Index>(keep + 8, e.size())));
  return m;
}

Vector ForecastModel::forecast(int horizon,
                               const std::vector<Vector>* exo_future) const {
  if (horizon < 0) throw std::domain_error("forecast: negative horizon");
  if (horizon == 0) return Vector();
  switch (kind_) {
    case ModelKind::kArima:
      return arima_->forecast(horizon);
    case ModelKind::kNarx:
      return narx_->forecast(narx_tail_, narx_exo_tail_, horizon, exo_future);
    case ModelKind::kStlNarx: {
      Vector res = narx_->forecast(narx_tail_, narx_exo_tail_, horizon, exo_future);
      Vector out(horizon);
      for (int h = 0; h < horizon; ++h) {
        double v = trend_last_ + trend_slope_ * (h + 1) + res[h];
        for (size_t k = 0; k < seasonal_cycle_.size(); ++k) {
          const auto& cyc = seasonal_cycle_[k];
          v += cyc[(cycle_phase_[k] + h) % cyc.size()];
        }
        out[h] = v;
      }
      return out;
    }
  }
  return Vector();
}

double ForecastModel::value_at_horizon(int h,
                                       const std::vector<Vector>* exo_future) const {
  if (h < 0) throw std::domain_error("value_at_horizon: negative horizon");
  if (h == 0) return last_value_;
  return forecast(h, exo_future)[h - 1];
}

json ForecastModel::to_json() const {
  json j;
  j["kind"] = model_kind_name(kind_);
  j["t_last_h"] = t_last_h_;
  j["last_value"] = last_value_;
  j["fit_mse"] = fit_mse_;
  if (arima_) j["arima"] = arima_->to_json();
  if (narx_) j["narx"] = narx_->to_json();
  if (narx_tail_.size() > 0)
    j["narx_tail"] = std::vector<double>(narx_tail_.data(),
                                         narx_tail_.data() + narx_tail_.size());
  if (!narx_exo_tail_.empty()) {
    json e = json::array();
    for (const auto& t : narx_exo_tail_)
      e.push_back(std::vector<double>(t.data(), t.data() + t.size()));
    j["narx_exo_tail"] = e;
  }
  if (kind_ == ModelKind::kStlNarx) {
    j["stl_periods"] = stl_periods_;
    json cycles = json::array();
    for (const auto& c : seasonal_cycle_)
      cycles.push_back(std::vector<double>(c.data(), c.data() + c.size()));
    j["seasonal_cycles"] = cycles;
    j["cycle_phase"] = cycle_phase_;
    j["trend_last"] = trend_last_;
    j["trend_slope"] = trend_slope_;
  }
  return j;
}

ForecastModel ForecastModel::from_json(const json& j) {
  ForecastModel m;
  const std::string kind = j.at("kind").get<std::string>();
  m.t_last_h_ = j.at("t_last_h").get<double>();
  m.last_value_ = j.at("last_value").get<double>();
  m.fit_mse_ = j.value("fit_mse", 0.0);
  auto load_vec = [](const json& a) {
    const auto v = a.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
  };
  if (j.contains("narx")) m.narx_ = NarxModel::from_json(j["narx"]);
  if (j.contains("narx_tail")) m.narx_tail_ = load_vec(j["narx_tail"]);
  if (j.contains("narx_exo_tail"))
    for (const auto& t : j["narx_exo_tail"]) m.narx_exo_tail_.push_back(load_vec(t));
  if (kind == "arima") {
    m.kind_ = ModelKind::kArima;
    m.arima_ = ArimaModel::from_json(j.at("arima"));
  } else if (kind == "narx") {
    m.kind_ = ModelKind::kNarx;
  } else {
    m.kind_ = ModelKind::kStlNarx;
    m.stl_periods_ = j.at("stl_periods").get<std::vector<int>>();
    for (const auto& c : j.at("seasonal_cycles")) m.seasonal_cycle_.push_back(load_vec(c));
    m.cycle_phase_ = j.at("cycle_phase").get<std::vector<int>>();
    m.trend_last_ = j.at("trend_last").get<double>();
    m.trend_slope_ = j.at("trend_slope").get<double>();
  }
  return m;
}

}  // namespace hettwin
