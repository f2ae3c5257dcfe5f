#include "nbv/view_space.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace nbv {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
}  // namespace

const CandidateView& ViewSpace::view(ViewId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= views.size())
    throw std::out_of_range("view id " + std::to_string(id) + " out of range");
  return views[static_cast<std::size_t>(id)];
}

std::vector<ViewId> ViewSpace::circle_ids(int circle) const {
  std::vector<ViewId> ids;
  for (const auto& v : views)
    if (v.circle_index == circle) ids.push_back(v.id);
  return ids;
}

std::vector<double> default_elevations() { return {15 * kDeg, 30 * kDeg, 45 * kDeg, 60 * kDeg, 75 * kDeg}; }

ViewSpace generate_view_space(int n_circles, int poses_per_circle, const std::vector<double>& elevations,
                              double radius, const Vec3& target) {
  if (elevations.empty()) throw std::invalid_argument("generate_view_space: empty elevation list");
  if (n_circles < 1 || static_cast<std::size_t>(n_circles) != elevations.size())
    throw std::invalid_argument("generate_view_space: need one elevation per circle");
  if (poses_per_circle < 1) throw std::invalid_argument("generate_view_space: poses_per_circle must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("generate_view_space: radius must be positive");
  for (std::size_t i = 0; i < elevations.size(); ++i) {
    if (!(elevations[i] > 0.0 && elevations[i] < 0.5 * kPi))
      throw std::invalid_argument("generate_view_space: elevations must lie in (0, pi/2)");
    if (i > 0 && !(elevations[i] > elevations[i - 1]))
      throw std::invalid_argument("generate_view_space: elevations must be strictly increasing");
  }

  ViewSpace vs;
  vs.n_circles = n_circles;
  vs.poses_per_circle = poses_per_circle;
  vs.middle_circle = n_circles / 2;
  vs.radius = radius;
  vs.target = target;
  vs.views.reserve(static_cast<std::size_t>(n_circles) * poses_per_circle);
  for (int c = 0; c < n_circles; ++c) {
    const double el = elevations[static_cast<std::size_t>(c)];
    for (int k = 0; k < poses_per_circle; ++k) {
      const double az = 2.0 * kPi * k / poses_per_circle;
      const Vec3 dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      CandidateView v;
      v.id = c * poses_per_circle + k;
      v.circle_index = c;
      v.azimuth_index = k;
      v.azimuth = az;
      v.elevation = el;
      v.pose = look_at(target + radius * dir, target);
      vs.views.push_back(v);
    }
  }
  return vs;
}

int RegionClustering::section_of(ViewId view) const {
  for (const auto& s : sections)
    for (ViewId m : s.members)
      if (m == view) return s.id;
  return -1;
}

RegionClustering cluster_regions(const ViewSpace& vs, int n_azimuth_bins) {
  if (vs.n_circles < 3) throw std::invalid_argument("cluster_regions: need at least 3 circles");
  if (n_azimuth_bins < 1 || vs.poses_per_circle % n_azimuth_bins != 0)
    throw std::invalid_argument("cluster_regions: azimuth bins must divide poses_per_circle");

  const int per_bin = vs.poses_per_circle / n_azimuth_bins;
  RegionClustering rc;
  rc.sections.resize(static_cast<std::size_t>(2 * n_azimuth_bins));
  for (int half = 0; half < 2; ++half)
    for (int b = 0; b < n_azimuth_bins; ++b) {
      auto& s = rc.sections[static_cast<std::size_t>(half * n_azimuth_bins + b)];
      s.id = half * n_azimuth_bins + b;
      s.upper = half == 1;
      s.azimuth_bin = b;
    }

  // Views are stored in id order, so members come out ascending.
  for (const auto& v : vs.views) {
    if (v.circle_index == vs.middle_circle) {
      rc.excluded.push_back(v.id);
      continue;
    }
    const int half = v.circle_index > vs.middle_circle ? 1 : 0;
    const int bin = v.azimuth_index / per_bin;
    rc.sections[static_cast<std::size_t>(half * n_azimuth_bins + bin)].members.push_back(v.id);
  }
  return rc;
}

std::vector<ViewId> initial_middle_views(const ViewSpace& vs, int count) {
  if (count < 1 || count > vs.poses_per_circle)
    throw std::invalid_argument("initial view count must be in [1, poses_per_circle]");
  std::vector<ViewId> ids;
  ids.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int k = static_cast<int>(static_cast<long>(i) * vs.poses_per_circle / count);
    ids.push_back(vs.middle_circle * vs.poses_per_circle + k);
  }
  return ids;
}

void write_view_space(std::ostream& os, const ViewSpace& vs) {
  char buf[64];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, " %.9g", x);
    os << buf;
  };
  for (const auto& v : vs.views) {
    os << v.id << ' ' << v.circle_index;
    put(v.azimuth);
    for (int i = 0; i < 3; ++i) put(v.pose.position[i]);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) put(v.pose.rotation(r, c));
    os << '\n';
  }
}

void write_view_space(const std::string& path, const ViewSpace& vs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_view_space(os, vs);
}

}  // namespace nbv
