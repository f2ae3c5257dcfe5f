#include "nbv/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace nbv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto i = [&] { return static_cast<int>(to_int(key, v)); };
  auto d = [&] { return to_double(key, v); };

  if (key == "scene") c.scene = v;
  else if (key == "width") c.camera.width = i();
  else if (key == "height") c.camera.height = i();
  else if (key == "fov_deg") c.camera.fov_y = d() * std::numbers::pi / 180.0;
  else if (key == "n_circles") c.n_circles = i();
  else if (key == "poses_per_circle") c.poses_per_circle = i();
  else if (key == "elevations_deg") c.elevations_deg = to_list(key, v);
  else if (key == "radius") c.radius = d();
  else if (key == "azimuth_bins") c.azimuth_bins = i();
  else if (key == "initial_views") c.initial_views = i();
  else if (key == "policy") c.policy = v;
  else if (key == "k") c.policy_options.k = i();
  else if (key == "lambda") c.policy_options.lambda = d();
  else if (key == "iterations") c.iterations = i();
  else if (key == "field_resolution") c.field_resolution = i();
  else if (key == "init_steps") c.init_steps = i();
  else if (key == "refine_steps") c.refine_steps = i();
  else if (key == "rays_per_batch") c.train.rays_per_batch = i();
  else if (key == "learning_rate") c.train.learning_rate = d();
  else if (key == "lr_decay") c.train.lr_decay = d();
  else if (key == "density_lr_scale") c.train.density_lr_scale = d();
  else if (key == "beta1") c.train.beta1 = d();
  else if (key == "beta2") c.train.beta2 = d();
  else if (key == "adam_epsilon") c.train.epsilon = d();
  else if (key == "n_samples") c.train.n_samples = i();
  else if (key == "t_near") c.train.t_near = d();
  else if (key == "t_far") c.train.t_far = d();
  else if (key == "background") {
    const auto rgb = to_list(key, v);
    if (rgb.size() != 3) throw std::invalid_argument("config: background expects r,g,b");
    c.train.background = Rgb(rgb[0], rgb[1], rgb[2]);
  } else if (key == "stratified") c.train.stratified = to_bool(key, v);
  else if (key == "random_background") c.train.random_background = to_bool(key, v);
  else if (key == "entropy_epsilon") c.entropy.epsilon = d();
  else if (key == "background_floor") c.entropy.background_floor = d();
  else if (key == "background_mode") c.entropy.background = parse_background_mode(v);
  else if (key == "mean_mode") c.entropy.mean = parse_mean_mode(v);
  else if (key == "downsample") c.downsample = i();
  else if (key == "mesh_resolution") c.mesh_resolution = i();
  else if (key == "mesh_side") c.mesh_side = d();
  else if (key == "mesh_iso") c.mesh_iso = d();
  else if (key == "fill_cavities") c.fill_cavities = to_bool(key, v);
  else if (key == "fscore_threshold") c.fscore_threshold = d();
  else if (key == "eval_points") c.eval_points = i();
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "out_dir") c.out_dir = v;
  else if (key == "write_entropy_maps") c.write_entropy_maps = to_bool(key, v);
  else if (key == "record_timing") c.record_timing = to_bool(key, v);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& is, ExperimentConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  return parse_config(is, std::move(base));
}

void write_config(std::ostream& os, const ExperimentConfig& c) {
  std::string elev;
  for (std::size_t i = 0; i < c.elevations_deg.size(); ++i) elev += (i ? "," : "") + fmt(c.elevations_deg[i]);
  const Rgb& bg = c.train.background;
  os << "scene = " << c.scene << '\n'
     << "width = " << c.camera.width << '\n'
     << "height = " << c.camera.height << '\n'
     << "fov_deg = " << fmt(c.camera.fov_y * 180.0 / std::numbers::pi) << '\n'
     << "n_circles = " << c.n_circles << '\n'
     << "poses_per_circle = " << c.poses_per_circle << '\n'
     << "elevations_deg = " << elev << '\n'
     << "radius = " << fmt(c.radius) << '\n'
     << "azimuth_bins = " << c.azimuth_bins << '\n'
     << "initial_views = " << c.initial_views << '\n'
     << "policy = " << c.policy << '\n'
     << "k = " << c.policy_options.k << '\n'
     << "lambda = " << fmt(c.policy_options.lambda) << '\n'
     << "iterations = " << c.iterations << '\n'
     << "field_resolution = " << c.field_resolution << '\n'
     << "init_steps = " << c.init_steps << '\n'
     << "refine_steps = " << c.refine_steps << '\n'
     << "rays_per_batch = " << c.train.rays_per_batch << '\n'
     << "learning_rate = " << fmt(c.train.learning_rate) << '\n'
     << "lr_decay = " << fmt(c.train.lr_decay) << '\n'
     << "density_lr_scale = " << fmt(c.train.density_lr_scale) << '\n'
     << "beta1 = " << fmt(c.train.beta1) << '\n'
     << "beta2 = " << fmt(c.train.beta2) << '\n'
     << "adam_epsilon = " << fmt(c.train.epsilon) << '\n'
     << "n_samples = " << c.train.n_samples << '\n'
     << "t_near = " << fmt(c.train.t_near) << '\n'
     << "t_far = " << fmt(c.train.t_far) << '\n'
     << "background = " << fmt(bg[0]) << ',' << fmt(bg[1]) << ',' << fmt(bg[2]) << '\n'
     << "stratified = " << (c.train.stratified ? "true" : "false") << '\n'
     << "random_background = " << (c.train.random_background ? "true" : "false") << '\n'
     << "entropy_epsilon = " << fmt(c.entropy.epsilon) << '\n'
     << "background_floor = " << fmt(c.entropy.background_floor) << '\n'
     << "background_mode = " << to_string(c.entropy.background) << '\n'
     << "mean_mode = " << to_string(c.entropy.mean) << '\n'
     << "downsample = " << c.downsample << '\n'
     << "mesh_resolution = " << c.mesh_resolution << '\n'
     << "mesh_side = " << fmt(c.mesh_side) << '\n'
     << "mesh_iso = " << fmt(c.mesh_iso) << '\n'
     << "fill_cavities = " << (c.fill_cavities ? "true" : "false") << '\n'
     << "fscore_threshold = " << fmt(c.fscore_threshold) << '\n'
     << "eval_points = " << c.eval_points << '\n'
     << "seed = " << c.seed << '\n'
     << "write_entropy_maps = " << (c.write_entropy_maps ? "true" : "false") << '\n'
     << "record_timing = " << (c.record_timing ? "true" : "false") << '\n';
}

void ExperimentConfig::validate() const {
  camera.validate();
  train.validate();
  entropy.validate();
  if (initial_views < 1 || initial_views > poses_per_circle)
    throw std::invalid_argument("config: initial_views must lie in [1, poses_per_circle]");
  if (iterations < 0) throw std::invalid_argument("config: iterations must be >= 0");
  if (init_steps < 0 || refine_steps < 0) throw std::invalid_argument("config: step counts must be >= 0");
  if (field_resolution < 2) throw std::invalid_argument("config: field_resolution must be >= 2");
  if (mesh_resolution < 8) throw std::invalid_argument("config: mesh_resolution must be >= 8");
  if (!(fscore_threshold > 0.0)) throw std::invalid_argument("config: fscore_threshold must be positive");
  if (eval_points < 1) throw std::invalid_argument("config: eval_points must be >= 1");
  parse_policy(policy);
  downsampled(camera, downsample);
}

}  // namespace nbv
