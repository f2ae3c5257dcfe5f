#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <vector>

namespace nbv {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid camera pose. `rotation` maps camera-frame vectors to world frame;
/// the camera looks down its local -Z axis with +Y up.
struct Pose {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  Vec3 forward() const { return -rotation.col(2); }
};

/// Builds a pose at `eye` looking at `target`. The up hint is world +Z,
/// falling back to +X when the view direction is (anti)parallel to it.
Pose look_at(const Vec3& eye, const Vec3& target);

struct CameraIntrinsics {
  int width = 100;
  int height = 100;
  double fov_y = 0.6981317007977318;  // 40 degrees

  double focal_px() const;
  void validate() const;
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();

  Vec3 at(double t) const { return origin + t * direction; }
};

using PointCloud = std::vector<Vec3>;

/// One ray per pixel center of the (width/downsample) x (height/downsample)
/// image, row-major, top row first.
std::vector<Ray> camera_rays(const CameraIntrinsics& cam, const Pose& pose, int downsample);

/// Intrinsics of the image produced by `camera_rays(cam, _, downsample)`.
CameraIntrinsics downsampled(const CameraIntrinsics& cam, int downsample);

/// Great-circle angle between the two camera positions as seen from `target`.
double spherical_distance(const Pose& a, const Pose& b, const Vec3& target);
double spherical_distance(const Vec3& a, const Vec3& b, const Vec3& target);

bool is_rotation(const Mat3& r, double tol = 1e-9);

}  // namespace nbv
