#pragma once

#include "hettwin/types.hpp"

#include <random>
#include <stdexcept>
#include <vector>

namespace hettwin {

struct KMeansResult {
  Matrix centroids;             // k x dims
  std::vector<int> assignment;  // per point
  double objective = 0.0;       // sum of squared distances to own centroid
  int iterations = 0;
};

namespace detail {

inline double kmeans_objective(const Matrix& pts, const Matrix& centroids,
                               const std::vector<int>& assign) {
  double obj = 0.0;
  for (Index i = 0; i < pts.rows(); ++i)
    obj += (pts.row(i) - centroids.row(assign[i])).squaredNorm();
  return obj;
}

inline KMeansResult lloyd_once(const Matrix& pts, int k, std::mt19937_64& rng,
                               int max_iter) {
  const Index n = pts.rows();
  Matrix centroids(k, pts.cols());

  // k-means++ seeding
  std::uniform_int_distribution<Index> first(0, n - 1);
  centroids.row(0) = pts.row(first(rng));
  Vector dist2 = (pts.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> uni(0.0, total);
      double r = uni(rng);
      for (Index i = 0; i < n; ++i) {
        r -= dist2[i];
        if (r <= 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = first(rng);
    }
    centroids.row(c) = pts.row(chosen);
    dist2 = dist2.cwiseMin((pts.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> assign(n, 0);
  KMeansResult res;
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (pts.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (pts.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {  // ties keep the lowest index
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    res.iterations = it + 1;
    // recompute centroids as member means; empty cluster keeps its centroid
    Matrix sums = Matrix::Zero(k, pts.cols());
    std::vector<int> counts(k, 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += pts.row(i);
      counts[assign[i]]++;
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) centroids.row(c) = sums.row(c) / counts[c];
    if (!changed && it > 0) break;
  }
  res.centroids = centroids;
  res.assignment = std::move(assign);
  res.objective = kmeans_objective(pts, res.centroids, res.assignment);
  return res;
}

}  // namespace detail

/// Lloyd iterations with seeded k-means++ starts; the best of `restarts`
/// runs (by objective) is returned, deterministically for a fixed seed.
inline KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed,
                           int max_iter = 100, int restarts = 8) {
  if (k < 1) throw std::domain_error("kmeans: k must be >= 1");
  if (points.rows() < k) throw std::domain_error("kmeans: fewer points than clusters");

  // count distinct points; k beyond that is unsatisfiable
  Index distinct = 0;
  for (Index i = 0; i < points.rows(); ++i) {
    bool dup = false;
    for (Index j = 0; j < i && !dup; ++j)
      dup = (points.row(i) - points.row(j)).norm() == 0.0;
    if (!dup) ++distinct;
  }
  if (distinct < k) throw std::domain_error("kmeans: fewer distinct points than clusters");

  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.objective = kInf;
  for (int r = 0; r < restarts; ++r) {
    KMeansResult cand = detail::lloyd_once(points, k, rng, max_iter);
    if (cand.objective < best.objective) best = std::move(cand);
  }
  return best;
}

}  // namespace hettwin
