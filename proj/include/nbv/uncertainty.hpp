#pragma once

#include "nbv/geometry.hpp"
#include "nbv/radiance_field.hpp"

#include <span>
#include <string>
#include <vector>

namespace nbv {

enum class BackgroundMode {
  kZeroEntropy,  // rays with total weight below the floor score 0
  kMaxEntropy,   // ... score ln N
  kExclude,      // ... are left out of view means (entropy stored as 0)
};

enum class MeanMode { kAllPixels, kOpacityMasked };

struct EntropyOptions {
  double epsilon = 1e-10;
  double background_floor = 0.1;
  BackgroundMode background = BackgroundMode::kZeroEntropy;
  MeanMode mean = MeanMode::kAllPixels;

  void validate() const;
};

/// Shannon entropy (nats) of the normalized weight vector, 0 ln 0 = 0.
/// Weight vectors with total mass below the background floor are scored
/// according to `opts.background`.
double ray_entropy(std::span<const double> w, const EntropyOptions& opts = {});

struct EntropyMap {
  int width = 0;
  int height = 0;
  int n_samples = 0;  // rays were sampled with this many points; ln N bounds the entropy
  std::vector<double> entropy;
  std::vector<double> opacity;
};

EntropyMap entropy_map(const RadianceField& f, const CameraIntrinsics& cam, const Pose& pose, const TrainConfig& cfg,
                       int downsample, const EntropyOptions& opts = {});

/// Mean of per-pixel entropy over all pixels, or over pixels whose opacity
/// reaches the background floor (0 when none do). In kExclude background
/// mode low-opacity pixels are always left out.
double view_mean_entropy(const EntropyMap& m, const EntropyOptions& opts = {});

/// P5 PGM with byte = floor(255 * h / ln N + 0.5).
void write_entropy_pgm(const std::string& path, const EntropyMap& m);

/// 16-byte header ("NBVENT01", u32 width, u32 height, little-endian) then
/// width*height little-endian float32 entropies, row-major.
void write_entropy_raw(const std::string& path, const EntropyMap& m);
EntropyMap read_entropy_raw(const std::string& path);

BackgroundMode parse_background_mode(const std::string& s);
MeanMode parse_mean_mode(const std::string& s);
std::string to_string(BackgroundMode m);
std::string to_string(MeanMode m);

}  // namespace nbv
