#pragma once

#include "nbv/geometry.hpp"
#include "nbv/image.hpp"
#include "nbv/mesh.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nbv {

enum class Shape { kSphere, kBox, kTorus, kCappedCylinder };

/// One analytic primitive. Size parameters by shape:
///   sphere: a = radius
///   box: (a, b, c) = half extents
///   torus: a = major radius, b = tube radius (ring in the local xy plane)
///   capped cylinder: a = radius, b = half height (axis along local z)
struct Primitive {
  Shape shape = Shape::kSphere;
  Vec3 translation = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();  // world-from-local
  double a = 0.0, b = 0.0, c = 0.0;
  Rgb albedo = Rgb::Constant(0.8);

  double local_sdf(const Vec3& p_local) const;
  double sdf(const Vec3& p) const { return local_sdf(rotation.transpose() * (p - translation)); }
  /// World-space axis-aligned bounds.
  std::pair<Vec3, Vec3> bounds() const;
};

/// Union of primitives inside a fixed axis-aligned scene box.
class SdfScene {
 public:
  static constexpr double kHalfExtent = 1.2;

  SdfScene() = default;
  explicit SdfScene(std::vector<Primitive> prims);

  void add(const Primitive& p);
  const std::vector<Primitive>& primitives() const { return prims_; }
  bool empty() const { return prims_.empty(); }

  /// Radius of the sphere circumscribing the scene box.
  static double bounding_radius();

 private:
  std::vector<Primitive> prims_;
};

/// Union SDF: min over primitives; +infinity for an empty scene.
double sdf_eval(const SdfScene& scene, const Vec3& p);

struct SurfaceHit {
  double t = 0.0;
  Vec3 point = Vec3::Zero();
  std::size_t primitive = 0;
};

/// Sphere tracing with at most 256 steps, hit tolerance 1e-4 and
/// t in [0.05, 4 * bounding_radius()].
std::optional<SurfaceHit> trace(const SdfScene& scene, const Ray& ray);

Vec3 surface_normal(const SdfScene& scene, const Vec3& p);

/// View-independent matte shading: albedo * (0.5 + 0.5 * max(0, n . L)) for
/// a fixed world-space light direction L.
Rgb shade(const SdfScene& scene, const SurfaceHit& hit);
Vec3 light_direction();

/// Pixels that miss every primitive take `background`; `coverage`, when
/// given, receives 1 for hit pixels and 0 otherwise.
Image render_ground_truth(const SdfScene& scene, const CameraIntrinsics& cam, const Pose& pose, const Rgb& background,
                          std::vector<double>* coverage = nullptr);

/// `n` surface points found by tracing random rays cast from the bounding
/// sphere into the scene; every point satisfies |sdf| < 1e-4.
PointCloud sample_surface_points(const SdfScene& scene, std::size_t n, std::uint64_t seed);

/// Marching cubes of -sdf at iso 0 on a cube of the given side at the origin.
TriangleMesh ground_truth_mesh(const SdfScene& scene, int resolution, double side);

/// Built-in scenes: "sphere", "snowman" (alias "sphere-on-box"), "loader",
/// "ficus".
SdfScene scene_preset(const std::string& name);
std::vector<std::string> scene_preset_names();

}  // namespace nbv
