#include "sga/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sga/error.hpp"
#include "sga/rng.hpp"
#include "sga/tensor.hpp"

namespace sga {

namespace {

int nearest_centroid(const Point& p, const std::vector<Point>& centroids) {
  int best = 0;
  double best_d = squared_distance(p, centroids[0]);
  for (int c = 1; c < static_cast<int>(centroids.size()); ++c) {
    double d = squared_distance(p, centroids[static_cast<std::size_t>(c)]);
    if (d < best_d) {  // strict: ties keep the lowest cluster id
      best_d = d;
      best = c;
    }
  }
  return best;
}

// k-means++ seeding: first centroid uniform, then proportional to squared
// distance from the nearest chosen centroid.
std::vector<Point> seed_centroids(const std::vector<Point>& points, int k, Rng& rng) {
  std::vector<Point> centroids;
  centroids.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size());
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = squared_distance(points[i], centroids[0]);
      for (std::size_t c = 1; c < centroids.size(); ++c)
        best = std::min(best, squared_distance(points[i], centroids[c]));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      // all remaining mass sits on chosen centroids; fall back to uniform
      centroids.push_back(points[rng.below(points.size())]);
      continue;
    }
    double target = rng.uniform() * total;
    std::size_t pick = points.size() - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      acc += d2[i];
      if (acc >= target) {
        pick = i;
        break;
      }
    }
    centroids.push_back(points[pick]);
  }
  return centroids;
}

}  // namespace

ClusterModel kmeans_fit(const std::vector<Point>& points, const std::vector<std::string>& ids,
                        int k, std::uint64_t seed, int max_iter, double tol) {
  if (k <= 0) throw validation_error("kmeans: k must be positive");
  if (static_cast<int>(points.size()) < k)
    throw validation_error("kmeans: " + std::to_string(points.size()) + " points < k=" +
                           std::to_string(k));
  if (!ids.empty() && ids.size() != points.size())
    throw validation_error("kmeans: ids/points length mismatch");

  Rng rng(seed ^ fnv1a("kmeans"));
  std::vector<Point> centroids = seed_centroids(points, k, rng);
  std::vector<int> assign_idx(points.size(), 0);

  for (int iter = 0; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i < points.size(); ++i)
      assign_idx[i] = nearest_centroid(points[i], centroids);

    // repair empty clusters with the point farthest from its centroid
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int a : assign_idx) ++counts[static_cast<std::size_t>(a)];
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      double worst = -1.0;
      std::size_t worst_i = 0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (counts[static_cast<std::size_t>(assign_idx[i])] <= 1) continue;
        double d = squared_distance(points[i], centroids[static_cast<std::size_t>(assign_idx[i])]);
        if (d > worst) {
          worst = d;
          worst_i = i;
        }
      }
      --counts[static_cast<std::size_t>(assign_idx[worst_i])];
      assign_idx[worst_i] = c;
      ++counts[static_cast<std::size_t>(c)];
      centroids[static_cast<std::size_t>(c)] = points[worst_i];
    }

    // centroid update, index-ordered accumulation
    std::size_t dim = points[0].size();
    std::vector<Point> next(static_cast<std::size_t>(k), Point(dim, 0.0));
    std::vector<std::size_t> n(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto c = static_cast<std::size_t>(assign_idx[i]);
      ++n[c];
      for (std::size_t j = 0; j < dim; ++j) next[c][j] += points[i][j];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      auto cu = static_cast<std::size_t>(c);
      for (std::size_t j = 0; j < dim; ++j) next[cu][j] /= static_cast<double>(n[cu]);
      shift = std::max(shift, std::sqrt(squared_distance(next[cu], centroids[cu])));
      centroids[cu] = std::move(next[cu]);
    }
    if (shift < tol) break;
  }

  // final assignment against the converged centroids
  for (std::size_t i = 0; i < points.size(); ++i)
    assign_idx[i] = nearest_centroid(points[i], centroids);

  ClusterModel model;
  model.k = k;
  model.centroids = std::move(centroids);
  model.sizes.assign(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    ++model.sizes[static_cast<std::size_t>(assign_idx[i])];
    if (!ids.empty()) model.assignments[ids[i]] = assign_idx[i];
  }
  return model;
}

int assign(const Point& point, const ClusterModel& model) {
  if (model.centroids.empty()) throw validation_error("assign: unfitted cluster model");
  if (static_cast<int>(point.size()) != model.dim())
    throw validation_error("assign: point dimension " + std::to_string(point.size()) +
                           " != model dimension " + std::to_string(model.dim()));
  return nearest_centroid(point, model.centroids);
}

double inertia(const ClusterModel& model, const std::vector<Point>& points,
               const std::vector<int>& assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    total += squared_distance(points[i], model.centroids[static_cast<std::size_t>(assignments[i])]);
  return total;
}

SilhouetteResult silhouette(const std::vector<Point>& points, const std::vector<int>& assignments) {
  if (points.size() != assignments.size())
    throw validation_error("silhouette: points/assignments length mismatch");
  int k = 0;
  for (int a : assignments) k = std::max(k, a + 1);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
  int nonempty = 0;
  for (auto s : sizes)
    if (s > 0) ++nonempty;
  if (nonempty < 2) throw validation_error("silhouette requires at least two clusters");

  std::size_t n = points.size();
  SilhouetteResult res;
  res.per_point.assign(n, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    auto own = static_cast<std::size_t>(assignments[i]);
    if (sizes[own] <= 1) {
      res.per_point[i] = 0.0;  // singleton convention
      continue;
    }
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[static_cast<std::size_t>(assignments[j])] +=
          std::sqrt(squared_distance(points[i], points[j]));
    }
    double a = sum[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      auto cu = static_cast<std::size_t>(c);
      if (cu == own || sizes[cu] == 0) continue;
      b = std::min(b, sum[cu] / static_cast<double>(sizes[cu]));
    }
    double denom = std::max(a, b);
    res.per_point[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }

  res.per_cluster.assign(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    res.per_cluster[static_cast<std::size_t>(assignments[i])] += res.per_point[i];
  for (int c = 0; c < k; ++c) {
    auto cu = static_cast<std::size_t>(c);
    if (sizes[cu] > 0) res.per_cluster[cu] /= static_cast<double>(sizes[cu]);
  }
  double total = 0.0;
  for (double s : res.per_point) total += s;
  res.mean = n > 0 ? total / static_cast<double>(n) : 0.0;
  return res;
}

std::vector<std::pair<int, double>> kmeans_inertia_sweep(const std::vector<Point>& points,
                                                         const std::vector<std::string>& ids,
                                                         const std::vector<int>& ks,
                                                         std::uint64_t seed) {
  std::vector<std::pair<int, double>> out;
  for (int k : ks) {
    ClusterModel m = kmeans_fit(points, ids, k, seed);
    std::vector<int> a(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) a[i] = assign(points[i], m);
    out.emplace_back(k, inertia(m, points, a));
  }
  return out;
}

}  // namespace sga
