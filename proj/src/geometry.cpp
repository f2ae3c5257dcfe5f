#include "nbv/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nbv {

Pose look_at(const Vec3& eye, const Vec3& target) {
  Vec3 fwd = target - eye;
  const double len = fwd.norm();
  if (!(len > 0.0)) throw std::invalid_argument("look_at: eye coincides with target");
  fwd /= len;

  Vec3 up_hint = Vec3::UnitZ();
  if (std::abs(fwd.dot(up_hint)) > 1.0 - 1e-12) up_hint = Vec3::UnitX();

  const Vec3 right = fwd.cross(up_hint).normalized();
  const Vec3 up = right.cross(fwd);

  Pose pose;
  pose.position = eye;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = up;
  pose.rotation.col(2) = -fwd;
  return pose;
}

double CameraIntrinsics::focal_px() const { return 0.5 * height / std::tan(0.5 * fov_y); }

void CameraIntrinsics::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("camera: width and height must be >= 1");
  if (!(fov_y > 0.0 && fov_y < std::numbers::pi)) throw std::invalid_argument("camera: fov must lie in (0, pi)");
}

CameraIntrinsics downsampled(const CameraIntrinsics& cam, int downsample) {
  cam.validate();
  if (downsample < 1 || cam.width % downsample != 0 || cam.height % downsample != 0)
    throw std::invalid_argument("downsample factor " + std::to_string(downsample) +
                                " must be >= 1 and divide the image dimensions");
  CameraIntrinsics out = cam;
  out.width = cam.width / downsample;
  out.height = cam.height / downsample;
  return out;
}

std::vector<Ray> camera_rays(const CameraIntrinsics& cam, const Pose& pose, int downsample) {
  const CameraIntrinsics small = downsampled(cam, downsample);
  const double f = cam.focal_px();
  const double cx = 0.5 * cam.width;
  const double cy = 0.5 * cam.height;

  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(small.width) * small.height);
  for (int row = 0; row < small.height; ++row) {
    const double v = (row + 0.5) * downsample;
    for (int col = 0; col < small.width; ++col) {
      const double u = (col + 0.5) * downsample;
      const Vec3 dir_cam((u - cx) / f, -(v - cy) / f, -1.0);
      rays.push_back({pose.position, (pose.rotation * dir_cam).normalized()});
    }
  }
  return rays;
}

double spherical_distance(const Vec3& a, const Vec3& b, const Vec3& target) {
  const Vec3 da = a - target;
  const Vec3 db = b - target;
  const double na = da.norm();
  const double nb = db.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("spherical_distance: position equals target");
  // atan2 form is symmetric in (a, b) and accurate near 0 and pi.
  const Vec3 ua = da / na;
  const Vec3 ub = db / nb;
  return std::atan2(ua.cross(ub).norm(), ua.dot(ub));
}

double spherical_distance(const Pose& a, const Pose& b, const Vec3& target) {
  return spherical_distance(a.position, b.position, target);
}

bool is_rotation(const Mat3& r, double tol) {
  const Mat3 e = r.transpose() * r - Mat3::Identity();
  return e.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace nbv
