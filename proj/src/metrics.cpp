#include "nbv/metrics.hpp"

#include "nbv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace nbv {

namespace {
constexpr std::uint32_t kLeafSize = 8;
}

KdTree::KdTree(PointCloud points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("KdTree: empty point set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, -1, 0.0});
  if (end - begin <= kLeafSize) return id;

  // Split on the widest axis of the node's bounding box.
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split = split;
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void KdTree::search(std::int32_t node_id, const Vec3& q, double& best, std::size_t& best_idx) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const double d2 = (points_[order_[i]] - q).squaredNorm();
      if (d2 < best || (d2 == best && order_[i] < best_idx)) {
        best = d2;
        best_idx = order_[i];
      }
    }
    return;
  }
  // Left holds coordinates <= split, right holds coordinates >= split.
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  search(near, q, best, best_idx);
  if (diff * diff <= best) search(far, q, best, best_idx);
}

std::pair<double, std::size_t> KdTree::nearest(const Vec3& q) const {
  double best = std::numeric_limits<double>::infinity();
  std::size_t idx = std::numeric_limits<std::size_t>::max();
  search(0, q, best, idx);
  return {best, idx};
}

std::vector<double> nearest_distances(const PointCloud& query, const PointCloud& reference) {
  if (reference.empty()) throw std::invalid_argument("nearest_distances: empty reference cloud");
  const KdTree tree(reference);
  std::vector<double> out;
  out.reserve(query.size());
  for (const auto& q : query) out.push_back(std::sqrt(tree.nearest(q).first));
  return out;
}

std::vector<double> nearest_distances_brute_force(const PointCloud& query, const PointCloud& reference) {
  if (reference.empty()) throw std::invalid_argument("nearest_distances: empty reference cloud");
  std::vector<double> out;
  out.reserve(query.size());
  for (const auto& q : query) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : reference) best = std::min(best, (r - q).squaredNorm());
    out.push_back(std::sqrt(best));
  }
  return out;
}

FScoreReport fscore(const PointCloud& pred, const PointCloud& gt, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("fscore: threshold must be positive");
  if (gt.empty()) throw std::invalid_argument("fscore: empty ground-truth cloud");
  FScoreReport r;
  r.threshold = threshold;
  r.n_pred = pred.size();
  r.n_gt = gt.size();
  if (pred.empty()) return r;

  const auto within = [threshold](const std::vector<double>& d) {
    return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [&](double x) { return x <= threshold; }));
  };
  r.pred_within = within(nearest_distances(pred, gt));
  r.gt_within = within(nearest_distances(gt, pred));
  r.precision = static_cast<double>(r.pred_within) / static_cast<double>(r.n_pred);
  r.recall = static_cast<double>(r.gt_within) / static_cast<double>(r.n_gt);
  if (r.precision + r.recall > 0.0) r.fscore = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

std::string to_csv_row(const FScoreReport& r) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%zu,%zu,%zu,%zu", r.precision, r.recall, r.fscore, r.threshold,
                r.pred_within, r.gt_within, r.n_pred, r.n_gt);
  return buf;
}

PointCloud read_points(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ply") == 0) return read_ply(path).vertices;
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  PointCloud pts;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Vec3 p;
    if (!(ls >> p.x() >> p.y() >> p.z())) throw std::runtime_error(path + ": bad point line: " + line);
    pts.push_back(p);
  }
  return pts;
}

void write_points(const std::string& path, const PointCloud& pts) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& p : pts) std::fprintf(f, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
  if (std::fclose(f) != 0) throw std::runtime_error("error writing " + path);
}

}  // namespace nbv
