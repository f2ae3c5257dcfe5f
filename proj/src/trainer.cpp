#include "nbv/trainer.hpp"

#include "nbv/random.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nbv {

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("Adam: size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
  }
}

double psnr_from_mse(double mse) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

TrainReport train(RadianceField& f, const std::vector<PosedImage>& images, const CameraIntrinsics& cam,
                  const TrainConfig& cfg) {
  if (images.empty()) throw std::invalid_argument("train: no training images");
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  std::vector<Ray> rays;
  std::vector<Rgb> targets;
  std::vector<double> coverage;
  for (const auto& pi : images) {
    if (pi.image.width != cam.width || pi.image.height != cam.height)
      throw std::invalid_argument("train: image size does not match the camera");
    if (!pi.coverage.empty() && pi.coverage.size() != pi.image.pixels.size())
      throw std::invalid_argument("train: coverage does not match the image");
    const auto r = camera_rays(cam, pi.pose, 1);
    rays.insert(rays.end(), r.begin(), r.end());
    targets.insert(targets.end(), pi.image.pixels.begin(), pi.image.pixels.end());
    if (pi.coverage.empty()) coverage.insert(coverage.end(), r.size(), 1.0);
    else coverage.insert(coverage.end(), pi.coverage.begin(), pi.coverage.end());
  }

  TrainReport report;
  Rng rng(cfg.seed);
  FieldGradient grad(f);
  Adam adam_density(grad.density.size(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  Adam adam_color(grad.color.size(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  const std::size_t batch = static_cast<std::size_t>(cfg.rays_per_batch);
  std::vector<Ray> batch_rays(batch);
  std::vector<Rgb> batch_gt(batch);
  std::vector<Rgb> batch_bg(cfg.random_background ? batch : 0);

  for (int step = 1; step <= cfg.steps; ++step) {
    const double progress = cfg.steps > 1 ? static_cast<double>(step - 1) / (cfg.steps - 1) : 0.0;
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, progress);
    adam_density.set_learning_rate(lr * cfg.density_lr_scale);
    adam_color.set_learning_rate(lr);
    for (std::size_t b = 0; b < batch; ++b) {
      const auto idx = static_cast<std::size_t>(rng.index(rays.size()));
      batch_rays[b] = rays[idx];
      batch_gt[b] = targets[idx];
      if (cfg.random_background) {
        // Re-composite the uncovered part over a random color so that
        // background-colored floaters are no longer free.
        const Rgb bg(rng.uniform(), rng.uniform(), rng.uniform());
        batch_bg[b] = bg;
        batch_gt[b] += (1.0 - coverage[idx]) * (bg - cfg.background);
      }
    }
    const double mse =
        loss_and_gradients(f, batch_rays, batch_gt, cfg, grad, cfg.stratified ? &rng : nullptr, batch_bg);
    adam_density.step(f.raw_density(), grad.density);
    adam_color.step(f.raw_color(), grad.color);
    if (step == 1 || step % cfg.log_every == 0 || step == cfg.steps)
      report.log.push_back({step, mse, psnr_from_mse(mse)});
  }

  report.final_mse = loss(f, rays, targets, cfg);
  report.final_psnr = psnr_from_mse(report.final_mse);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace nbv
