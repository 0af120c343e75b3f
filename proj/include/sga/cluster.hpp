#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sga {

using Point = std::vector<double>;

struct ClusterModel {
  int k = 0;
  std::vector<Point> centroids;                 // k rows
  std::map<std::string, int> assignments;       // fit-set situation id -> cluster
  std::vector<std::size_t> sizes;               // per cluster, over the fit set

  int dim() const { return centroids.empty() ? 0 : static_cast<int>(centroids[0].size()); }
};

// Lloyd iterations from k-means++ seeding until the largest centroid shift
// drops below tol or max_iter is hit. Empty clusters are repaired by seizing
// the point farthest from its current centroid.
ClusterModel kmeans_fit(const std::vector<Point>& points, const std::vector<std::string>& ids,
                        int k, std::uint64_t seed, int max_iter = 100, double tol = 1e-9);

// Nearest centroid by Euclidean distance, lowest cluster id on ties.
int assign(const Point& point, const ClusterModel& model);

double inertia(const ClusterModel& model, const std::vector<Point>& points,
               const std::vector<int>& assignments);

struct SilhouetteResult {
  std::vector<double> per_point;
  std::vector<double> per_cluster;  // mean over members; singleton points score 0
  double mean = 0.0;
};

// Standard silhouette s = (b - a) / max(a, b) with Euclidean distances.
// Requires at least two distinct clusters.
SilhouetteResult silhouette(const std::vector<Point>& points, const std::vector<int>& assignments);

// Diagnostic sweep: inertia after fitting each candidate k (elbow reading is
// up to the caller; the cluster count itself is a config value).
std::vector<std::pair<int, double>> kmeans_inertia_sweep(const std::vector<Point>& points,
                                                         const std::vector<std::string>& ids,
                                                         const std::vector<int>& ks,
                                                         std::uint64_t seed);

}  // namespace sga
