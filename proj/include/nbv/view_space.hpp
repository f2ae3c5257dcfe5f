#pragma once

#include "nbv/geometry.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace nbv {

using ViewId = int;

struct CandidateView {
  ViewId id = 0;
  int circle_index = 0;
  int azimuth_index = 0;
  double azimuth = 0.0;    // radians
  double elevation = 0.0;  // radians
  Pose pose;
};

/// Candidate poses on horizontal circles of a hemisphere around `target`.
/// View ids are assigned circle-major: id = circle * poses_per_circle + k.
struct ViewSpace {
  std::vector<CandidateView> views;
  int n_circles = 0;
  int poses_per_circle = 0;
  int middle_circle = 0;
  double radius = 0.0;
  Vec3 target = Vec3::Zero();

  const CandidateView& view(ViewId id) const;
  std::vector<ViewId> circle_ids(int circle) const;
  std::size_t size() const { return views.size(); }
};

/// Five elevations {15, 30, 45, 60, 75} degrees.
std::vector<double> default_elevations();

ViewSpace generate_view_space(int n_circles, int poses_per_circle, const std::vector<double>& elevations,
                              double radius, const Vec3& target);

struct Section {
  int id = 0;
  bool upper = false;
  int azimuth_bin = 0;
  std::vector<ViewId> members;  // ascending
};

/// Lower-half sections come first (ids 0..bins-1), then the upper half, each
/// ordered by increasing azimuth. Middle-circle views are excluded.
struct RegionClustering {
  std::vector<Section> sections;
  std::vector<ViewId> excluded;

  /// Section id of `view`, or -1 for excluded views.
  int section_of(ViewId view) const;
};

RegionClustering cluster_regions(const ViewSpace& vs, int n_azimuth_bins);

/// Evenly spaced `count` ids on the middle circle, starting at azimuth 0.
std::vector<ViewId> initial_middle_views(const ViewSpace& vs, int count);

/// One line per view: `id circle azimuth px py pz r00 r01 r02 r10 ... r22`.
void write_view_space(std::ostream& os, const ViewSpace& vs);
void write_view_space(const std::string& path, const ViewSpace& vs);

}  // namespace nbv
