#include "nbv/random.hpp"
#include "nbv/view_space.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

using namespace nbv;

namespace {

constexpr double kPi = std::numbers::pi;

double deg(double d) { return d * kPi / 180.0; }

std::vector<double> elevations_rad(const std::vector<double>& degs) {
  std::vector<double> out;
  for (double d : degs) out.push_back(deg(d));
  return out;
}

}  // namespace

TEST_CASE("default view space has 150 poses on the hemisphere") {
  const ViewSpace vs = generate_view_space(5, 30, default_elevations(), 4.0, Vec3::Zero());
  CHECK(vs.size() == 150);
  CHECK(vs.middle_circle == 2);
  std::set<ViewId> ids;
  for (const auto& v : vs.views) {
    ids.insert(v.id);
    CHECK(std::abs(v.pose.position.norm() - 4.0) < 1e-9);
    CHECK(is_rotation(v.pose.rotation));
    const Vec3 want = (-v.pose.position).normalized();
    CHECK(std::acos(std::clamp(v.pose.forward().dot(want), -1.0, 1.0)) < 1e-7);
    CHECK(v.pose.position.z() > 0.0);
  }
  CHECK(ids.size() == 150);
}

TEST_CASE("azimuths within a circle are evenly spaced from zero") {
  const ViewSpace vs = generate_view_space(5, 30, default_elevations(), 2.0, Vec3(0.1, -0.2, 0.3));
  for (int c = 0; c < 5; ++c) {
    const auto ids = vs.circle_ids(c);
    REQUIRE(ids.size() == 30);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      CHECK(vs.view(ids[k]).azimuth == doctest::Approx(2.0 * kPi * k / 30).epsilon(1e-12));
      CHECK(std::abs((vs.view(ids[k]).pose.position - vs.target).norm() - 2.0) < 1e-9);
    }
  }
}

TEST_CASE("single pose looks at the origin from distance one") {
  const ViewSpace vs = generate_view_space(1, 1, {deg(45)}, 1.0, Vec3::Zero());
  REQUIRE(vs.size() == 1);
  const Pose& p = vs.views[0].pose;
  CHECK(p.position.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((p.forward() - (-p.position).normalized()).norm() < 1e-9);
}

TEST_CASE("view space rejects bad arguments") {
  CHECK_THROWS_AS(generate_view_space(0, 30, {}, 1.0, Vec3::Zero()), std::invalid_argument);
  CHECK_THROWS_AS(generate_view_space(2, 30, {deg(30), deg(30)}, 1.0, Vec3::Zero()), std::invalid_argument);
  CHECK_THROWS_AS(generate_view_space(2, 30, {deg(40), deg(30)}, 1.0, Vec3::Zero()), std::invalid_argument);
  CHECK_THROWS_AS(generate_view_space(1, 30, {deg(30)}, 0.0, Vec3::Zero()), std::invalid_argument);
  CHECK_THROWS_AS(generate_view_space(1, 30, {deg(30)}, -1.0, Vec3::Zero()), std::invalid_argument);
  CHECK_THROWS_AS(generate_view_space(1, 30, {deg(90)}, 1.0, Vec3::Zero()), std::invalid_argument);
}

TEST_CASE("look_at handles the poles") {
  for (const Vec3& eye : {Vec3(0, 0, 3), Vec3(0, 0, -3), Vec3(1, 2, 3)}) {
    const Pose p = look_at(eye, Vec3::Zero());
    CHECK(is_rotation(p.rotation));
    CHECK((p.forward() - (-eye).normalized()).norm() < 1e-12);
  }
  CHECK_THROWS_AS(look_at(Vec3::Ones(), Vec3::Ones()), std::invalid_argument);
}

TEST_CASE("default clustering: 12 sections of 10") {
  const ViewSpace vs = generate_view_space(5, 30, default_elevations(), 4.0, Vec3::Zero());
  const RegionClustering rc = cluster_regions(vs, 6);
  REQUIRE(rc.sections.size() == 12);
  for (std::size_t s = 0; s < rc.sections.size(); ++s) {
    CHECK(rc.sections[s].id == static_cast<int>(s));
    CHECK(rc.sections[s].members.size() == 10);
    CHECK(rc.sections[s].upper == (s >= 6));
  }
  CHECK(rc.excluded == vs.circle_ids(2));
  // lower half first, increasing azimuth
  CHECK(rc.section_of(0) == 0);
  CHECK(rc.section_of(5) == 1);
  CHECK(rc.section_of(4 * 30 + 29) == 11);
  CHECK(rc.section_of(2 * 30 + 3) == -1);
}

TEST_CASE("three circles of six, three bins: six sections of two") {
  const ViewSpace vs = generate_view_space(3, 6, elevations_rad({20, 40, 60}), 1.0, Vec3::Zero());
  const RegionClustering rc = cluster_regions(vs, 3);
  REQUIRE(rc.sections.size() == 6);
  for (const auto& s : rc.sections) CHECK(s.members.size() == 2);
}

TEST_CASE("clustering errors") {
  const ViewSpace two = generate_view_space(2, 6, elevations_rad({20, 40}), 1.0, Vec3::Zero());
  CHECK_THROWS_AS(cluster_regions(two, 3), std::invalid_argument);
  const ViewSpace three = generate_view_space(3, 6, elevations_rad({20, 40, 60}), 1.0, Vec3::Zero());
  CHECK_THROWS_AS(cluster_regions(three, 4), std::invalid_argument);
  CHECK_THROWS_AS(cluster_regions(three, 0), std::invalid_argument);
}

TEST_CASE("property: sections partition the non-middle views") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int circles = 3 + static_cast<int>(rng.index(5));
    const int bins = 1 + static_cast<int>(rng.index(6));
    const int ppc = bins * (1 + static_cast<int>(rng.index(5)));
    std::vector<double> elev;
    for (int c = 0; c < circles; ++c) elev.push_back(deg(5.0 + 80.0 * c / circles));
    const ViewSpace vs = generate_view_space(circles, ppc, elev, 1.0 + rng.uniform(), Vec3::Zero());
    const RegionClustering rc = cluster_regions(vs, bins);
    CHECK(rc.sections.size() == static_cast<std::size_t>(2 * bins));
    std::multiset<ViewId> seen;
    for (const auto& s : rc.sections)
      for (ViewId id : s.members) seen.insert(id);
    for (const auto& v : vs.views) {
      const bool middle = v.circle_index == vs.middle_circle;
      CHECK(seen.count(v.id) == (middle ? 0u : 1u));
    }
    CHECK(seen.size() + rc.excluded.size() == vs.size());
  }
}

TEST_CASE("camera rays") {
  const CameraIntrinsics cam;  // 100 x 100
  const Pose pose = look_at(Vec3(3, 1, 2), Vec3::Zero());
  const auto rays = camera_rays(cam, pose, 4);
  CHECK(rays.size() == 625);
  for (const auto& r : rays) {
    CHECK(std::abs(r.direction.norm() - 1.0) < 1e-9);
    CHECK(r.origin == pose.position);
  }
  CHECK(camera_rays(cam, pose, 1).size() == 10000);
  CHECK_THROWS_AS(camera_rays(cam, pose, 3), std::invalid_argument);
  CHECK_THROWS_AS(camera_rays(cam, pose, 0), std::invalid_argument);

  // odd-sized image: the middle pixel center is the principal point
  CameraIntrinsics odd;
  odd.width = 25;
  odd.height = 25;
  const auto center = camera_rays(odd, pose, 1)[12 * 25 + 12];
  CHECK((center.direction - (-pose.position).normalized()).norm() < 1e-12);

  // top row points up, left column points left (in camera terms)
  const auto full = camera_rays(odd, pose, 1);
  const Vec3 up = pose.rotation.col(1), right = pose.rotation.col(0);
  CHECK(full[12].direction.dot(up) > 0.0);
  CHECK(full[12 * 25].direction.dot(right) < 0.0);
}

TEST_CASE("spherical distance") {
  const auto at = [](double elev_deg, double az_deg) {
    const double e = deg(elev_deg), a = deg(az_deg);
    return look_at(Vec3(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e)) * 2.5, Vec3::Zero());
  };
  const Pose a = at(45, 0), b = at(45, 180);
  CHECK(spherical_distance(a, a, Vec3::Zero()) == 0.0);
  CHECK(spherical_distance(a, b, Vec3::Zero()) == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(spherical_distance(at(0, 37), at(90, 123), Vec3::Zero()) == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK_THROWS_AS(spherical_distance(Vec3::Zero(), Vec3::Ones(), Vec3::Zero()), std::invalid_argument);

  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(rng.normal(), rng.normal(), rng.normal()), q(rng.normal(), rng.normal(), rng.normal());
    const double d = spherical_distance(p, q, Vec3::Zero());
    CHECK(d == spherical_distance(q, p, Vec3::Zero()));
    CHECK(d >= 0.0);
    CHECK(d <= kPi);
  }
}

TEST_CASE("initial middle views are evenly spaced") {
  const ViewSpace vs = generate_view_space(5, 30, default_elevations(), 4.0, Vec3::Zero());
  const auto ids = initial_middle_views(vs, 6);
  CHECK(ids == std::vector<ViewId>{60, 65, 70, 75, 80, 85});
  CHECK_THROWS_AS(initial_middle_views(vs, 31), std::invalid_argument);
}

TEST_CASE("view file has one line per view with 15 fields") {
  const ViewSpace vs = generate_view_space(5, 30, default_elevations(), 4.0, Vec3::Zero());
  std::ostringstream os;
  write_view_space(os, vs);
  std::istringstream is(os.str());
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::vector<double> vals;
    double x;
    while (ls >> x) vals.push_back(x);
    CHECK(vals.size() == 15);
    CHECK(vals[0] == n);
    ++n;
  }
  CHECK(n == 150);
}
