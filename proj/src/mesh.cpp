#include "nbv/mesh.hpp"

#include "nbv/random.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nbv {

namespace {
double triangle_area(const TriangleMesh& m, const std::array<std::uint32_t, 3>& t) {
  const Vec3& a = m.vertices[t[0]];
  return 0.5 * (m.vertices[t[1]] - a).cross(m.vertices[t[2]] - a).norm();
}
}  // namespace

double TriangleMesh::area() const {
  double total = 0.0;
  for (const auto& t : triangles) total += triangle_area(*this, t);
  return total;
}

std::size_t fill_cavities(DensityGrid& g, double iso) {
  const std::size_t n = g.values.size();
  if (n == 0) return 0;
  // Flood the below-iso region from the border; whatever stays unreached is enclosed.
  std::vector<char> open(n, 0);
  std::deque<std::array<int, 3>> queue;
  auto seed = [&](int i, int j, int k) {
    const std::size_t idx = g.index(i, j, k);
    if (open[idx] || g.values[idx] > iso) return;
    open[idx] = 1;
    queue.push_back({i, j, k});
  };
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (i == 0 || j == 0 || k == 0 || i == g.nx - 1 || j == g.ny - 1 || k == g.nz - 1) seed(i, j, k);
  static constexpr int kSteps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!queue.empty()) {
    const auto [i, j, k] = queue.front();
    queue.pop_front();
    for (const auto& s : kSteps) {
      const int a = i + s[0], b = j + s[1], c = k + s[2];
      if (a < 0 || b < 0 || c < 0 || a >= g.nx || b >= g.ny || c >= g.nz) continue;
      seed(a, b, c);
    }
  }
  const double top = *std::max_element(g.values.begin(), g.values.end());
  std::size_t raised = 0;
  for (std::size_t idx = 0; idx < n; ++idx)
    if (!open[idx] && g.values[idx] <= iso) {
      g.values[idx] = top;
      ++raised;
    }
  return raised;
}

PointCloud sample_mesh_points(const TriangleMesh& m, std::size_t n, std::uint64_t seed) {
  if (m.triangles.empty()) throw std::invalid_argument("sample_mesh_points: empty mesh");
  std::vector<double> cumulative;
  cumulative.reserve(m.triangles.size());
  double total = 0.0;
  for (const auto& t : m.triangles) {
    total += triangle_area(m, t);
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_mesh_points: mesh has zero area");

  Rng rng(seed);
  PointCloud pts;
  pts.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& t = m.triangles[static_cast<std::size_t>(it - cumulative.begin())];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const double u = 1.0 - r1, v = r1 * (1.0 - r2), w = r1 * r2;
    pts.push_back(u * m.vertices[t[0]] + v * m.vertices[t[1]] + w * m.vertices[t[2]]);
  }
  return pts;
}

void write_ply(const std::string& path, const TriangleMesh& m) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(f, "ply\nformat ascii 1.0\nelement vertex %zu\nproperty double x\nproperty double y\nproperty double z\n",
               m.vertices.size());
  std::fprintf(f, "element face %zu\nproperty list uchar int vertex_indices\nend_header\n", m.triangles.size());
  // 17 significant digits so that reading the file back reproduces the mesh exactly.
  for (const auto& v : m.vertices) std::fprintf(f, "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
  for (const auto& t : m.triangles) std::fprintf(f, "3 %u %u %u\n", t[0], t[1], t[2]);
  if (std::fclose(f) != 0) throw std::runtime_error("error writing " + path);
}

TriangleMesh read_ply(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::size_t n_vertices = 0, n_faces = 0;
  if (!std::getline(is, line) || line != "ply") throw std::runtime_error(path + ": not a PLY file");
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw std::runtime_error(path + ": only ascii PLY is supported");
    } else if (word == "element") {
      std::string kind;
      std::size_t count = 0;
      ls >> kind >> count;
      if (kind == "vertex") n_vertices = count;
      if (kind == "face") n_faces = count;
    } else if (word == "end_header") {
      break;
    }
  }

  TriangleMesh m;
  m.vertices.resize(n_vertices);
  for (auto& v : m.vertices) {
    if (!std::getline(is, line)) throw std::runtime_error(path + ": truncated vertex list");
    std::istringstream ls(line);
    if (!(ls >> v.x() >> v.y() >> v.z())) throw std::runtime_error(path + ": bad vertex line");
  }
  m.triangles.reserve(n_faces);
  for (std::size_t f = 0; f < n_faces; ++f) {
    int count = 0;
    std::array<std::uint32_t, 3> t{};
    if (!(is >> count >> t[0] >> t[1] >> t[2]) || count != 3) throw std::runtime_error(path + ": bad face");
    for (auto idx : t)
      if (idx >= n_vertices) throw std::runtime_error(path + ": face index out of range");
    m.triangles.push_back(t);
  }
  return m;
}

}  // namespace nbv
