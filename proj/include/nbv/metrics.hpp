#pragma once

#include "nbv/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nbv {

/// Exact nearest-neighbour index over a fixed point set.
class KdTree {
 public:
  explicit KdTree(PointCloud points);

  /// Squared distance to, and index of, the closest stored point.
  std::pair<double, std::size_t> nearest(const Vec3& q) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::uint32_t begin = 0, end = 0;  // range in order_ for leaves
    std::int32_t left = -1, right = -1;
    int axis = -1;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& q, double& best, std::size_t& best_idx) const;

  PointCloud points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Distance from each query point to its nearest reference point.
std::vector<double> nearest_distances(const PointCloud& query, const PointCloud& reference);

/// O(n*m) scan; reference implementation for tests and tiny inputs.
std::vector<double> nearest_distances_brute_force(const PointCloud& query, const PointCloud& reference);

struct FScoreReport {
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
  double threshold = 0.0;
  std::size_t pred_within = 0;  // predicted points within threshold of gt
  std::size_t gt_within = 0;    // gt points within threshold of prediction
  std::size_t n_pred = 0;
  std::size_t n_gt = 0;
};

FScoreReport fscore(const PointCloud& pred, const PointCloud& gt, double threshold);

/// One-line CSV record `precision,recall,fscore,threshold,pred_within,gt_within,n_pred,n_gt`.
std::string to_csv_row(const FScoreReport& r);

/// Plain `x y z` lines, or the vertex element of a PLY file.
PointCloud read_points(const std::string& path);
void write_points(const std::string& path, const PointCloud& pts);

}  // namespace nbv
