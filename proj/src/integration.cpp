#include "hettwin/integration/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hettwin {

namespace {

double median_spacing(const Vector& t) {
  std::vector<double> gaps;
  gaps.reserve(t.size() - 1);
  for (Index i = 1; i < t.size(); ++i) gaps.push_back(t[i] - t[i - 1]);
  std::sort(gaps.begin(), gaps.end());
  const size_t mid = gaps.size() / 2;
  return gaps.size() % 2 ? gaps[mid] : 0.5 * (gaps[mid - 1] + gaps[mid]);
}

}  // namespace

ResampledSeries gpr_resample(const Vector& sample_instants, const Vector& values,
                             const Vector& target_instants, GprConfig cfg) {
  const Index n = sample_instants.size();
  if (values.size() != n) throw std::domain_error("gpr_resample: size mismatch");
  if (n < 3) throw std::domain_error("gpr_resample: need at least 3 observations");
  if (cfg.noise_var < 0.0) throw std::domain_error("gpr_resample: negative noise");

  ResampledSeries out;
  out.target_instants = target_instants;

  const double mean = values.mean();
  const Vector y = values.array() - mean;
  double signal_var = cfg.signal_var;
  if (signal_var <= 0.0) signal_var = y.squaredNorm() / n;
  if (signal_var <= 0.0) {
    // constant observations: the posterior is that constant with no spread
    out.mean = Vector::Constant(target_instants.size(), mean);
    out.variance = Vector::Zero(target_instants.size());
    out.length_scale = cfg.length_scale;
    out.noise_var = cfg.noise_var;
    return out;
  }
  double ell = cfg.length_scale > 0.0 ? cfg.length_scale : median_spacing(sample_instants);
  if (!(ell > 0.0)) throw std::domain_error("gpr_resample: degenerate length scale");

  auto kernel = [&](double a, double b) {
    const double d = (a - b) / ell;
    return signal_var * std::exp(-0.5 * d * d);
  };

  Matrix k(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j) {
      const double v = kernel(sample_instants[i], sample_instants[j]);
      k(i, j) = v;
      k(j, i) = v;
    }

  Eigen::LLT<Matrix> llt;
  double jitter = cfg.jitter * signal_var;
  for (int attempt = 0;; ++attempt) {
    Matrix kj = k;
    kj.diagonal().array() += cfg.noise_var + jitter;
    llt.compute(kj);
    if (llt.info() == Eigen::Success) break;
    if (attempt >= 8)
      throw std::runtime_error("gpr_resample: kernel matrix not factorizable even "
                               "with jitter " + std::to_string(jitter));
    jitter *= 10.0;
  }
  // cheap condition estimate from the Cholesky diagonal
  const Vector ldiag = llt.matrixL().toDenseMatrix().diagonal();
  const double cond_est = std::pow(ldiag.maxCoeff() / ldiag.minCoeff(), 2.0);
  if (!(cond_est < 1e17))
    throw std::runtime_error("gpr_resample: kernel matrix ill-conditioned (cond ~ " +
                             std::to_string(cond_est) + ")");

  const Vector alpha = llt.solve(y);
  const Index m = target_instants.size();
  out.mean.resize(m);
  out.variance.resize(m);
  Vector ks(n);
  for (Index q = 0; q < m; ++q) {
    for (Index i = 0; i < n; ++i) ks[i] = kernel(sample_instants[i], target_instants[q]);
    out.mean[q] = ks.dot(alpha) + mean;
    const Vector w = llt.matrixL().solve(ks);
    out.variance[q] = std::max(signal_var - w.squaredNorm(), 0.0);
  }
  out.length_scale = ell;
  out.signal_var = signal_var;
  out.noise_var = cfg.noise_var;
  return out;
}

}  // namespace hettwin
