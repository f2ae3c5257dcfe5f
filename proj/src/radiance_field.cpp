#include "nbv/radiance_field.hpp"

#include "nbv/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace nbv {

namespace {

struct Corners {
  std::array<std::uint32_t, 8> idx;
  std::array<double, 8> w;
};

// Raw values and activation derivatives for one sample, kept for backprop.
struct SampleCache {
  bool inside = false;
  Corners corners;
  double dsigma_draw = 0.0;
  Rgb dcolor_draw = Rgb::Zero();
};

bool locate(const RadianceField& f, const Vec3& p, Corners& out) {
  const Aabb& b = f.bounds();
  if (!b.contains(p)) return false;
  const auto res = f.resolution();
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double g = (p[a] - b.lo[a]) / (b.hi[a] - b.lo[a]) * (res[static_cast<std::size_t>(a)] - 1);
    int i = static_cast<int>(std::floor(g));
    i = std::clamp(i, 0, res[static_cast<std::size_t>(a)] - 2);
    base[a] = i;
    frac[a] = g - i;
  }
  int c = 0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? frac[2] : 1.0 - frac[2];
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? frac[1] : 1.0 - frac[1];
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? frac[0] : 1.0 - frac[0];
        out.idx[static_cast<std::size_t>(c)] =
            static_cast<std::uint32_t>(f.node_index(base[0] + dx, base[1] + dy, base[2] + dz));
        out.w[static_cast<std::size_t>(c)] = wx * wy * wz;
        ++c;
      }
    }
  }
  return true;
}

// Interpolated raw parameters at the located corners, activated.
FieldSample activate(const RadianceField& f, const Corners& c, SampleCache* cache) {
  const auto& d = f.raw_density();
  const auto& col = f.raw_color();
  double rd = 0.0, r0 = 0.0, r1 = 0.0, r2 = 0.0;
  for (std::size_t k = 0; k < 8; ++k) {
    const double w = c.w[k];
    const std::size_t i = c.idx[k];
    rd += w * d[i];
    r0 += w * col[3 * i];
    r1 += w * col[3 * i + 1];
    r2 += w * col[3 * i + 2];
  }
  FieldSample s;
  s.color = Rgb(sigmoid(r0), sigmoid(r1), sigmoid(r2));
  if (cache) {
    // One exp serves both softplus and its derivative.
    if (rd > 30.0) {
      s.sigma = softplus(rd);
      cache->dsigma_draw = sigmoid(rd);
    } else {
      const double e = std::exp(rd);
      s.sigma = std::log1p(e);
      cache->dsigma_draw = e / (1.0 + e);
    }
    cache->dcolor_draw = s.color.cwiseProduct(Rgb::Ones() - s.color);
  } else {
    s.sigma = softplus(rd);
  }
  return s;
}

void check_bounds(const Aabb& b) {
  if (!((b.hi.array() > b.lo.array()).all())) throw std::invalid_argument("field bounds must have positive extent");
}

}  // namespace

double softplus(double x) { return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

RadianceField::RadianceField(const Aabb& bounds, int nx, int ny, int nz) : bounds_(bounds), nx_(nx), ny_(ny), nz_(nz) {
  check_bounds(bounds);
  if (nx < 2 || ny < 2 || nz < 2) throw std::invalid_argument("field resolution must be >= 2 per axis");
  const std::size_t n = static_cast<std::size_t>(nx) * ny * nz;
  density_.assign(n, kInitRawDensity);
  color_.assign(3 * n, kInitRawColor);
}

Vec3 RadianceField::node_position(int i, int j, int k) const {
  const Vec3 ext = bounds_.hi - bounds_.lo;
  return bounds_.lo + Vec3(ext.x() * i / (nx_ - 1), ext.y() * j / (ny_ - 1), ext.z() * k / (nz_ - 1));
}

void RadianceField::quantize_float32() {
  for (auto& v : density_) v = static_cast<double>(static_cast<float>(v));
  for (auto& v : color_) v = static_cast<double>(static_cast<float>(v));
}

FieldSample field_query(const RadianceField& f, const Vec3& p) {
  Corners c;
  if (!locate(f, p, c)) return {};
  return activate(f, c, nullptr);
}

void TrainConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("train config: steps must be >= 0");
  if (rays_per_batch < 1) throw std::invalid_argument("train config: rays_per_batch must be >= 1");
  if (n_samples < 2) throw std::invalid_argument("train config: n_samples must be >= 2");
  if (!(t_near < t_far)) throw std::invalid_argument("train config: t_near must be < t_far");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning rate must be positive");
  if (!(density_lr_scale > 0.0)) throw std::invalid_argument("train config: density_lr_scale must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw std::invalid_argument("train config: lr_decay must lie in (0, 1]");
}

RayTrace composite_samples(std::span<const double> sigma, std::span<const double> delta, std::span<const Rgb> color,
                           const Rgb& background) {
  const std::size_t n = sigma.size();
  if (delta.size() != n || color.size() != n) throw std::invalid_argument("composite_samples: length mismatch");
  RayTrace rt;
  rt.sigma.assign(sigma.begin(), sigma.end());
  rt.delta.assign(delta.begin(), delta.end());
  rt.color.assign(color.begin(), color.end());
  rt.weight.resize(n);
  rt.transmittance.resize(n);
  double T = 1.0;
  Rgb c = Rgb::Zero();
  double opacity = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::exp(-sigma[i] * delta[i]);
    rt.transmittance[i] = T;
    const double w = T * (1.0 - p);
    rt.weight[i] = w;
    c += w * color[i];
    opacity += w;
    T *= p;
  }
  rt.final_transmittance = T;
  rt.c_hat = c + T * background;
  rt.opacity = opacity;
  return rt;
}

void sample_depths(const TrainConfig& cfg, Rng* jitter, std::vector<double>& t, std::vector<double>& delta) {
  const int n = cfg.n_samples;
  const double bin = cfg.bin_width();
  t.resize(static_cast<std::size_t>(n));
  delta.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = jitter ? jitter->uniform() : 0.5;
    t[static_cast<std::size_t>(i)] = cfg.t_near + (i + u) * bin;
  }
  for (int i = 0; i + 1 < n; ++i)
    delta[static_cast<std::size_t>(i)] = t[static_cast<std::size_t>(i + 1)] - t[static_cast<std::size_t>(i)];
  delta[static_cast<std::size_t>(n - 1)] = bin;
}

RayTrace render_ray(const RadianceField& f, const Ray& r, const TrainConfig& cfg, Rng* jitter) {
  std::vector<double> t, delta;
  sample_depths(cfg, jitter, t, delta);
  std::vector<double> sigma(t.size());
  std::vector<Rgb> color(t.size());
  Corners c;
  for (std::size_t i = 0; i < t.size(); ++i) {
    FieldSample s;
    if (locate(f, r.at(t[i]), c)) s = activate(f, c, nullptr);
    sigma[i] = s.sigma;
    color[i] = s.color;
  }
  RayTrace rt = composite_samples(sigma, delta, color, cfg.background);
  rt.t = std::move(t);
  return rt;
}

Image render_image(const RadianceField& f, const CameraIntrinsics& cam, const Pose& pose, const TrainConfig& cfg,
                   int downsample) {
  const auto rays = camera_rays(cam, pose, downsample);
  const CameraIntrinsics small = downsampled(cam, downsample);
  Image img(small.width, small.height);
  for (std::size_t i = 0; i < rays.size(); ++i) img.pixels[i] = render_ray(f, rays[i], cfg).c_hat;
  return img;
}

void FieldGradient::zero() {
  std::fill(density.begin(), density.end(), 0.0);
  std::fill(color.begin(), color.end(), 0.0);
}

double loss_and_gradients(const RadianceField& f, std::span<const Ray> rays, std::span<const Rgb> gt,
                          const TrainConfig& cfg, FieldGradient& grad, Rng* jitter,
                          std::span<const Rgb> backgrounds) {
  if (!backgrounds.empty() && backgrounds.size() != rays.size())
    throw std::invalid_argument("loss_and_gradients: one background per ray expected");
  if (rays.size() != gt.size()) throw std::invalid_argument("loss_and_gradients: rays and targets differ in length");
  if (rays.empty()) throw std::invalid_argument("loss_and_gradients: empty ray batch");
  if (grad.density.size() != f.raw_density().size() || grad.color.size() != f.raw_color().size())
    throw std::invalid_argument("loss_and_gradients: gradient buffer does not match the field");
  grad.zero();

  const std::size_t n = static_cast<std::size_t>(cfg.n_samples);
  std::vector<double> t, delta, sigma(n), weight(n), trans(n), pass(n);
  std::vector<Rgb> color(n);
  std::vector<SampleCache> cache(n);
  const double scale = 2.0 / (3.0 * static_cast<double>(rays.size()));
  double sse = 0.0;

  for (std::size_t r = 0; r < rays.size(); ++r) {
    sample_depths(cfg, jitter, t, delta);

    // Forward pass.
    double T = 1.0;
    Rgb c_hat = Rgb::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      SampleCache& sc = cache[i];
      sc.inside = locate(f, rays[r].at(t[i]), sc.corners);
      FieldSample s;
      if (sc.inside) s = activate(f, sc.corners, &sc);
      sigma[i] = s.sigma;
      color[i] = s.color;
      const double p = std::exp(-s.sigma * delta[i]);
      pass[i] = p;
      trans[i] = T;
      weight[i] = T * (1.0 - p);
      c_hat += weight[i] * s.color;
      T *= p;
    }
    const Rgb bg_term = T * (backgrounds.empty() ? cfg.background : backgrounds[r]);
    c_hat += bg_term;
    const Rgb err = c_hat - gt[r];
    sse += err.squaredNorm();
    const Rgb g_chat = scale * err;

    // Backward pass. suffix = sum_{j>i} w_j c_j + T_{N+1} background.
    Rgb suffix = bg_term;
    for (std::size_t i = n; i-- > 0;) {
      const SampleCache& sc = cache[i];
      if (sc.inside) {
        const double t_next = trans[i] * pass[i];
        const Rgb dchat_dsigma = delta[i] * (t_next * color[i] - suffix);
        const double g_raw_d = g_chat.dot(dchat_dsigma) * sc.dsigma_draw;
        const Rgb g_raw_c = weight[i] * g_chat.cwiseProduct(sc.dcolor_draw);
        for (std::size_t k = 0; k < 8; ++k) {
          const double w = sc.corners.w[k];
          const std::size_t idx = sc.corners.idx[k];
          grad.density[idx] += w * g_raw_d;
          grad.color[3 * idx] += w * g_raw_c[0];
          grad.color[3 * idx + 1] += w * g_raw_c[1];
          grad.color[3 * idx + 2] += w * g_raw_c[2];
        }
      }
      suffix += weight[i] * color[i];
    }
  }
  return sse / (3.0 * static_cast<double>(rays.size()));
}

double loss(const RadianceField& f, std::span<const Ray> rays, std::span<const Rgb> gt, const TrainConfig& cfg) {
  if (rays.size() != gt.size()) throw std::invalid_argument("loss: rays and targets differ in length");
  if (rays.empty()) throw std::invalid_argument("loss: empty ray batch");
  double sse = 0.0;
  for (std::size_t r = 0; r < rays.size(); ++r) sse += (render_ray(f, rays[r], cfg).c_hat - gt[r]).squaredNorm();
  return sse / (3.0 * static_cast<double>(rays.size()));
}

DensityGrid density_grid_export(const RadianceField& f, int resolution, double side, const Vec3& center) {
  if (resolution < 8) throw std::invalid_argument("density_grid_export: resolution must be >= 8");
  DensityGrid g(resolution, side, center);
  for (int k = 0; k < resolution; ++k)
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i < resolution; ++i) g.at(i, j, k) = field_query(f, g.position(i, j, k)).sigma;
  return g;
}

namespace {

constexpr char kMagic[8] = {'N', 'B', 'V', 'F', 'L', 'D', '0', '1'};

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw std::runtime_error("checkpoint: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const std::string& path, const RadianceField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os.write(kMagic, sizeof kMagic);
  for (int a = 0; a < 3; ++a) put_le<double>(os, f.bounds().lo[a]);
  for (int a = 0; a < 3; ++a) put_le<double>(os, f.bounds().hi[a]);
  for (int n : f.resolution()) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(n));
  for (double v : f.raw_density()) put_le<float>(os, static_cast<float>(v));
  for (double v : f.raw_color()) put_le<float>(os, static_cast<float>(v));
  if (!os) throw std::runtime_error("error writing " + path);
}

RadianceField load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error(path + ": not a field checkpoint");
  Aabb b;
  for (int a = 0; a < 3; ++a) b.lo[a] = get_le<double>(is);
  for (int a = 0; a < 3; ++a) b.hi[a] = get_le<double>(is);
  int res[3];
  for (int& n : res) {
    const auto v = get_le<std::uint32_t>(is);
    if (v < 2 || v > 4096) throw std::runtime_error(path + ": implausible resolution");
    n = static_cast<int>(v);
  }
  RadianceField f(b, res[0], res[1], res[2]);
  for (double& v : f.raw_density()) v = get_le<float>(is);
  for (double& v : f.raw_color()) v = get_le<float>(is);
  return f;
}

}  // namespace nbv
