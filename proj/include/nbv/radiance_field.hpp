#pragma once

#include "nbv/geometry.hpp"
#include "nbv/image.hpp"
#include "nbv/mesh.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nbv {

class Rng;

struct Aabb {
  Vec3 lo = Vec3::Constant(-1.2);
  Vec3 hi = Vec3::Constant(1.2);

  bool operator==(const Aabb&) const = default;

  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

struct FieldSample {
  double sigma = 0.0;
  Rgb color = Rgb::Constant(0.5);
};

/// Trainable density/color grid. Raw parameters live on grid nodes spanning
/// `bounds` (node (0,0,0) at bounds.lo, node (n-1,...) at bounds.hi), are
/// trilinearly interpolated, then activated: sigma = softplus(raw),
/// color = sigmoid(raw). Outside the bounds the field is empty.
class RadianceField {
 public:
  static constexpr double kInitRawDensity = -2.0;
  static constexpr double kInitRawColor = 0.0;

  RadianceField(const Aabb& bounds, int nx, int ny, int nz);
  RadianceField(const Aabb& bounds, int n) : RadianceField(bounds, n, n, n) {}

  const Aabb& bounds() const { return bounds_; }
  std::array<int, 3> resolution() const { return {nx_, ny_, nz_}; }
  std::size_t node_count() const { return density_.size(); }
  std::size_t node_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * ny_ + j) * nx_ + i;
  }
  Vec3 node_position(int i, int j, int k) const;

  std::vector<double>& raw_density() { return density_; }
  const std::vector<double>& raw_density() const { return density_; }
  /// Three interleaved channels per node.
  std::vector<double>& raw_color() { return color_; }
  const std::vector<double>& raw_color() const { return color_; }

  /// Rounds every raw parameter to the nearest float32, i.e. the state a
  /// checkpoint round trip produces.
  void quantize_float32();

  bool operator==(const RadianceField& o) const = default;

 private:
  Aabb bounds_;
  int nx_, ny_, nz_;
  std::vector<double> density_;
  std::vector<double> color_;
};

FieldSample field_query(const RadianceField& f, const Vec3& p);

double softplus(double x);
double sigmoid(double x);

struct TrainConfig {
  int steps = 3000;
  int rays_per_batch = 512;
  double learning_rate = 0.08;
  double lr_decay = 0.1;  // learning rate at the last step, relative to the first
  double density_lr_scale = 4.0;  // density learning rate relative to color
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  int n_samples = 64;
  double t_near = 1.9;
  double t_far = 6.1;
  Rgb background = Rgb::Ones();
  bool stratified = true;
  bool random_background = true;  // training only; needs image coverage
  std::uint64_t seed = 0;
  int log_every = 250;

  void validate() const;
  double bin_width() const { return (t_far - t_near) / n_samples; }
};

/// Per-ray quadrature record. `transmittance[i]` is T_i for sample i;
/// `final_transmittance` is T_{N+1}.
struct RayTrace {
  std::vector<double> t;
  std::vector<double> delta;
  std::vector<double> sigma;
  std::vector<Rgb> color;
  std::vector<double> weight;
  std::vector<double> transmittance;
  double final_transmittance = 1.0;
  Rgb c_hat = Rgb::Zero();
  double opacity = 0.0;
};

/// Alpha compositing of given samples onto `background`:
/// w_i = T_i (1 - exp(-sigma_i delta_i)), C = sum w_i c_i + T_{N+1} background.
RayTrace composite_samples(std::span<const double> sigma, std::span<const double> delta, std::span<const Rgb> color,
                           const Rgb& background);

/// Sample depths: bin centers of [t_near, t_far], or uniform within each bin
/// when `jitter` is given. delta_i = t_{i+1} - t_i, with the nominal bin width
/// for the last sample.
void sample_depths(const TrainConfig& cfg, Rng* jitter, std::vector<double>& t, std::vector<double>& delta);

RayTrace render_ray(const RadianceField& f, const Ray& r, const TrainConfig& cfg, Rng* jitter = nullptr);

/// Deterministic (unjittered) render of the downsampled image.
Image render_image(const RadianceField& f, const CameraIntrinsics& cam, const Pose& pose, const TrainConfig& cfg,
                   int downsample);

struct FieldGradient {
  std::vector<double> density;
  std::vector<double> color;

  explicit FieldGradient(const RadianceField& f) : density(f.raw_density().size()), color(f.raw_color().size()) {}
  void zero();
};

/// Mean squared error over rays x 3 channels and its gradient with respect to
/// every raw parameter. Rays are processed in order, so accumulation is
/// deterministic. Jitter is applied only when `jitter` is given.
double loss_and_gradients(const RadianceField& f, std::span<const Ray> rays, std::span<const Rgb> gt,
                          const TrainConfig& cfg, FieldGradient& grad, Rng* jitter = nullptr,
                          std::span<const Rgb> backgrounds = {});

/// Loss only (no gradient); same sampling rules.
double loss(const RadianceField& f, std::span<const Ray> rays, std::span<const Rgb> gt, const TrainConfig& cfg);

/// Density sampled at the voxel centers of a cube, ready for marching cubes.
DensityGrid density_grid_export(const RadianceField& f, int resolution, double side, const Vec3& center);

/// Binary checkpoint: 8-byte magic "NBVFLD01", bounds (6 x f64 LE: lo, hi),
/// resolution (3 x u32 LE), raw density (f32 LE, x fastest), then raw color
/// (f32 LE, x fastest, 3 interleaved channels per node).
void save_checkpoint(const std::string& path, const RadianceField& f);
RadianceField load_checkpoint(const std::string& path);

}  // namespace nbv
