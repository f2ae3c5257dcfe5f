#include "nbv/uncertainty.hpp"

#include "nbv/image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace nbv {

void EntropyOptions::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("entropy options: epsilon must be positive");
  if (!(background_floor >= 0.0 && background_floor <= 1.0))
    throw std::invalid_argument("entropy options: background floor must lie in [0, 1]");
}

double ray_entropy(std::span<const double> w, const EntropyOptions& opts) {
  double total = 0.0;
  for (double x : w) {
    if (x < 0.0 || std::isnan(x)) throw std::invalid_argument("ray_entropy: negative weight");
    total += x;
  }
  if (total < opts.background_floor || total <= 0.0) {
    if (opts.background == BackgroundMode::kMaxEntropy && !w.empty()) return std::log(static_cast<double>(w.size()));
    return 0.0;
  }
  const double norm = std::max(total, opts.epsilon);
  double h = 0.0;
  for (double x : w) {
    if (x <= 0.0) continue;
    const double p = x / norm;
    h -= p * std::log(p);
  }
  return std::clamp(h, 0.0, std::log(static_cast<double>(w.size())));
}

EntropyMap entropy_map(const RadianceField& f, const CameraIntrinsics& cam, const Pose& pose, const TrainConfig& cfg,
                       int downsample, const EntropyOptions& opts) {
  opts.validate();
  const auto rays = camera_rays(cam, pose, downsample);
  const CameraIntrinsics small = downsampled(cam, downsample);
  EntropyMap m;
  m.width = small.width;
  m.height = small.height;
  m.n_samples = cfg.n_samples;
  m.entropy.resize(rays.size());
  m.opacity.resize(rays.size());
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const RayTrace rt = render_ray(f, rays[i], cfg);
    m.entropy[i] = ray_entropy(rt.weight, opts);
    m.opacity[i] = rt.opacity;
  }
  return m;
}

double view_mean_entropy(const EntropyMap& m, const EntropyOptions& opts) {
  if (m.entropy.empty()) throw std::invalid_argument("view_mean_entropy: empty map");
  const bool masked = opts.mean == MeanMode::kOpacityMasked || opts.background == BackgroundMode::kExclude;
  if (!masked) return std::accumulate(m.entropy.begin(), m.entropy.end(), 0.0) / static_cast<double>(m.entropy.size());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < m.entropy.size(); ++i)
    if (m.opacity[i] >= opts.background_floor) {
      sum += m.entropy[i];
      ++count;
    }
  return count ? sum / static_cast<double>(count) : 0.0;
}

void write_entropy_pgm(const std::string& path, const EntropyMap& m) {
  const double max_h = std::log(static_cast<double>(std::max(m.n_samples, 2)));
  std::vector<unsigned char> bytes(m.entropy.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize_unit(m.entropy[i] / max_h);
  write_pgm(path, m.width, m.height, bytes);
}

namespace {
constexpr char kMagic[8] = {'N', 'B', 'V', 'E', 'N', 'T', '0', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("entropy dump: truncated file");
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
}
}  // namespace

void write_entropy_raw(const std::string& path, const EntropyMap& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os.write(kMagic, sizeof kMagic);
  put_u32(os, static_cast<std::uint32_t>(m.width));
  put_u32(os, static_cast<std::uint32_t>(m.height));
  for (double h : m.entropy) put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(h)));
}

EntropyMap read_entropy_raw(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error(path + ": bad magic");
  EntropyMap m;
  m.width = static_cast<int>(get_u32(is));
  m.height = static_cast<int>(get_u32(is));
  m.entropy.resize(static_cast<std::size_t>(m.width) * m.height);
  for (double& h : m.entropy) h = std::bit_cast<float>(get_u32(is));
  m.opacity.assign(m.entropy.size(), 1.0);
  return m;
}

BackgroundMode parse_background_mode(const std::string& s) {
  if (s == "zero-entropy") return BackgroundMode::kZeroEntropy;
  if (s == "max-entropy") return BackgroundMode::kMaxEntropy;
  if (s == "exclude") return BackgroundMode::kExclude;
  throw std::invalid_argument("unknown background mode '" + s + "'");
}

MeanMode parse_mean_mode(const std::string& s) {
  if (s == "all-pixels") return MeanMode::kAllPixels;
  if (s == "opacity-masked") return MeanMode::kOpacityMasked;
  throw std::invalid_argument("unknown mean mode '" + s + "'");
}

std::string to_string(BackgroundMode m) {
  switch (m) {
    case BackgroundMode::kZeroEntropy: return "zero-entropy";
    case BackgroundMode::kMaxEntropy: return "max-entropy";
    case BackgroundMode::kExclude: return "exclude";
  }
  return "?";
}

std::string to_string(MeanMode m) { return m == MeanMode::kAllPixels ? "all-pixels" : "opacity-masked"; }

}  // namespace nbv
