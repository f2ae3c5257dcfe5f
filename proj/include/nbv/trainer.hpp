#pragma once

#include "nbv/geometry.hpp"
#include "nbv/image.hpp"
#include "nbv/radiance_field.hpp"

#include <vector>

namespace nbv {

/// Bias-corrected Adam over one flat parameter vector.
class Adam {
 public:
  Adam(std::size_t n, double learning_rate, double beta1, double beta2, double epsilon)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad);
  long iteration() const { return t_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

struct PosedImage {
  Pose pose;
  Image image;  // composited over TrainConfig::background
  std::vector<double> coverage;  // per-pixel alpha; empty means fully covered
};

struct TrainLogEntry {
  int step = 0;
  double mse = 0.0;
  double psnr = 0.0;
};

struct TrainReport {
  std::vector<TrainLogEntry> log;  // batch loss at logging steps
  double final_mse = 0.0;          // unjittered, over every training pixel
  double final_psnr = 0.0;
  double seconds = 0.0;
};

double psnr_from_mse(double mse);

/// Runs `cfg.steps` Adam updates on random ray batches drawn uniformly over
/// all pixels of all `images` (seeded by cfg.seed). Optimizer moments start
/// at zero on every call; the field itself carries the warm start.
TrainReport train(RadianceField& f, const std::vector<PosedImage>& images, const CameraIntrinsics& cam,
                  const TrainConfig& cfg);

}  // namespace nbv
