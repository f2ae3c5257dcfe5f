#include "nbv/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace nbv {

unsigned char quantize_unit(double c) {
  const double v = std::floor(std::clamp(c, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<unsigned char>(v);
}

void write_ppm(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> bytes;
  bytes.reserve(img.pixels.size() * 3);
  for (const auto& p : img.pixels)
    for (int c = 0; c < 3; ++c) bytes.push_back(quantize_unit(p[c]));
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Image read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P6" || w < 1 || h < 1 || maxval != 255) throw std::runtime_error(path + ": not a P6/255 PPM");
  is.get();
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * 3);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!is) throw std::runtime_error(path + ": truncated pixel data");
  Image img(w, h);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = Rgb(bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]) / 255.0;
  return img;
}

void write_pgm(const std::string& path, int width, int height, const std::vector<unsigned char>& bytes) {
  if (bytes.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("write_pgm: pixel count does not match dimensions");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "P5\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace nbv
