#include "nbv/scene.hpp"

#include "nbv/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nbv {

namespace {
constexpr int kMaxTraceSteps = 256;
constexpr double kHitTolerance = 1e-4;
constexpr double kTraceNear = 0.05;

Mat3 rotation_x(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix(); }
}  // namespace

double Primitive::local_sdf(const Vec3& p) const {
  switch (shape) {
    case Shape::kSphere:
      return p.norm() - a;
    case Shape::kBox: {
      const Vec3 q = p.cwiseAbs() - Vec3(a, b, c);
      return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
    }
    case Shape::kTorus: {
      const double ring = std::hypot(p.x(), p.y()) - a;
      return std::hypot(ring, p.z()) - b;
    }
    case Shape::kCappedCylinder: {
      const double dr = std::hypot(p.x(), p.y()) - a;
      const double dz = std::abs(p.z()) - b;
      return std::min(std::max(dr, dz), 0.0) + std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
    }
  }
  return std::numeric_limits<double>::infinity();
}

std::pair<Vec3, Vec3> Primitive::bounds() const {
  Vec3 half;
  switch (shape) {
    case Shape::kSphere: half = Vec3::Constant(a); break;
    case Shape::kBox: half = Vec3(a, b, c); break;
    case Shape::kTorus: half = Vec3(a + b, a + b, b); break;
    case Shape::kCappedCylinder: half = Vec3(a, a, b); break;
  }
  // |R| * half gives the extent of the rotated local box.
  const Vec3 world_half = rotation.cwiseAbs() * half;
  return {translation - world_half, translation + world_half};
}

SdfScene::SdfScene(std::vector<Primitive> prims) {
  for (const auto& p : prims) add(p);
}

void SdfScene::add(const Primitive& p) {
  const auto [lo, hi] = p.bounds();
  if (lo.minCoeff() < -kHalfExtent || hi.maxCoeff() > kHalfExtent)
    throw std::invalid_argument("primitive extends outside the scene bounds");
  if (p.albedo.minCoeff() < 0.0 || p.albedo.maxCoeff() > 1.0)
    throw std::invalid_argument("albedo channels must lie in [0, 1]");
  prims_.push_back(p);
}

double SdfScene::bounding_radius() { return kHalfExtent * std::sqrt(3.0); }

double sdf_eval(const SdfScene& scene, const Vec3& p) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& prim : scene.primitives()) d = std::min(d, prim.sdf(p));
  return d;
}

std::optional<SurfaceHit> trace(const SdfScene& scene, const Ray& ray) {
  if (scene.empty()) return std::nullopt;
  const double t_far = 4.0 * SdfScene::bounding_radius();
  double t = kTraceNear;
  for (int step = 0; step < kMaxTraceSteps && t <= t_far; ++step) {
    const Vec3 p = ray.at(t);
    const double d = sdf_eval(scene, p);
    if (d < kHitTolerance) {
      SurfaceHit hit{t, p, 0};
      double best = std::numeric_limits<double>::infinity();
      const auto& prims = scene.primitives();
      for (std::size_t i = 0; i < prims.size(); ++i) {
        const double di = prims[i].sdf(p);
        if (di < best) {
          best = di;
          hit.primitive = i;
        }
      }
      return hit;
    }
    t += d;
  }
  return std::nullopt;
}

Vec3 surface_normal(const SdfScene& scene, const Vec3& p) {
  constexpr double h = 1e-6;
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    e[i] = h;
    g[i] = sdf_eval(scene, p + e) - sdf_eval(scene, p - e);
  }
  const double n = g.norm();
  return n > 0.0 ? Vec3(g / n) : Vec3(Vec3::UnitZ());
}

Vec3 light_direction() { return Vec3(0.35, 0.25, 1.0).normalized(); }

Rgb shade(const SdfScene& scene, const SurfaceHit& hit) {
  const Vec3 n = surface_normal(scene, hit.point);
  const double lambert = std::max(0.0, n.dot(light_direction()));
  return scene.primitives()[hit.primitive].albedo * (0.5 + 0.5 * lambert);
}

Image render_ground_truth(const SdfScene& scene, const CameraIntrinsics& cam, const Pose& pose, const Rgb& background,
                          std::vector<double>* coverage) {
  const auto rays = camera_rays(cam, pose, 1);
  Image img(cam.width, cam.height, background);
  if (coverage) coverage->assign(rays.size(), 0.0);
  for (std::size_t i = 0; i < rays.size(); ++i)
    if (const auto hit = trace(scene, rays[i])) {
      img.pixels[i] = shade(scene, *hit);
      if (coverage) (*coverage)[i] = 1.0;
    }
  return img;
}

PointCloud sample_surface_points(const SdfScene& scene, std::size_t n, std::uint64_t seed) {
  if (scene.empty()) throw std::invalid_argument("sample_surface_points: empty scene");
  if (n < 1) throw std::invalid_argument("sample_surface_points: n must be >= 1");
  const double rho = SdfScene::bounding_radius();
  Rng rng(seed);
  PointCloud pts;
  pts.reserve(n);
  const std::size_t max_attempts = 1000 * n + 100000;
  for (std::size_t attempt = 0; pts.size() < n; ++attempt) {
    if (attempt >= max_attempts) throw std::runtime_error("sample_surface_points: scene too small to hit");
    Vec3 origin(rng.normal(), rng.normal(), rng.normal());
    if (!(origin.norm() > 0.0)) continue;
    origin = rho * origin.normalized();
    Vec3 aim;
    do {
      aim = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    } while (aim.squaredNorm() > 1.0);
    const Vec3 dir = (rho * aim - origin).normalized();
    const auto hit = trace(scene, Ray{origin, dir});
    if (hit && std::abs(sdf_eval(scene, hit->point)) < kHitTolerance) pts.push_back(hit->point);
  }
  return pts;
}

TriangleMesh ground_truth_mesh(const SdfScene& scene, int resolution, double side) {
  if (resolution < 8) throw std::invalid_argument("ground_truth_mesh: resolution must be >= 8");
  if (scene.empty()) return {};
  DensityGrid g(resolution, side, Vec3::Zero());
  for (int k = 0; k < resolution; ++k)
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i < resolution; ++i) g.at(i, j, k) = -sdf_eval(scene, g.position(i, j, k));
  return marching_cubes(g, 0.0);
}

std::vector<std::string> scene_preset_names() { return {"sphere", "snowman", "loader", "ficus"}; }

SdfScene scene_preset(const std::string& name) {
  auto make = [](Shape s, Vec3 t, double a, double b, double c, Rgb albedo, Mat3 r = Mat3::Identity()) {
    Primitive p;
    p.shape = s;
    p.translation = t;
    p.rotation = r;
    p.a = a;
    p.b = b;
    p.c = c;
    p.albedo = albedo;
    return p;
  };

  if (name == "sphere") {
    return SdfScene({make(Shape::kSphere, Vec3(0, 0, 0), 0.7, 0, 0, Rgb(0.9, 0.5, 0.25))});
  }
  if (name == "snowman" || name == "sphere-on-box") {
    return SdfScene({
        make(Shape::kBox, Vec3(0, 0, -0.45), 0.5, 0.5, 0.3, Rgb(0.25, 0.45, 0.85)),
        make(Shape::kSphere, Vec3(0, 0, 0.25), 0.4, 0, 0, Rgb(0.95, 0.85, 0.3)),
    });
  }
  if (name == "loader") {
    // Upright wheel-like torus resting on a flat chassis.
    return SdfScene({
        make(Shape::kBox, Vec3(0, 0, -0.35), 0.75, 0.45, 0.25, Rgb(0.9, 0.75, 0.2)),
        make(Shape::kTorus, Vec3(0.1, 0, 0.38), 0.38, 0.13, 0, Rgb(0.3, 0.3, 0.35), rotation_x(std::numbers::pi / 2)),
    });
  }
  if (name == "ficus") {
    return SdfScene({
        make(Shape::kCappedCylinder, Vec3(0, 0, -0.65), 0.32, 0.2, 0, Rgb(0.7, 0.35, 0.2)),
        make(Shape::kCappedCylinder, Vec3(0, 0, -0.05), 0.08, 0.45, 0, Rgb(0.45, 0.3, 0.15)),
        make(Shape::kSphere, Vec3(0.32, 0.0, 0.42), 0.24, 0, 0, Rgb(0.2, 0.7, 0.25)),
        make(Shape::kSphere, Vec3(-0.2, 0.3, 0.55), 0.22, 0, 0, Rgb(0.3, 0.8, 0.35)),
        make(Shape::kSphere, Vec3(-0.18, -0.3, 0.3), 0.2, 0, 0, Rgb(0.15, 0.6, 0.3)),
    });
  }
  throw std::invalid_argument("unknown scene preset '" + name + "'");
}

}  // namespace nbv
