#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace nbv {

using Rgb = Eigen::Vector3d;

/// Row-major RGB image with channels in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  Image() = default;
  Image(int w, int h, const Rgb& fill = Rgb::Zero())
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Binary PPM (P6, maxval 255); channel byte = floor(c * 255 + 0.5) after clamping.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

/// Binary PGM (P5, maxval 255) from already-quantized bytes.
void write_pgm(const std::string& path, int width, int height, const std::vector<unsigned char>& bytes);

unsigned char quantize_unit(double c);

}  // namespace nbv
