#include "nbv/mesh.hpp"

#include <stdexcept>
#include <unordered_map>

namespace nbv {

namespace {

// Classic corner layout: 0 (0,0,0) 1 (1,0,0) 2 (1,1,0) 3 (0,1,0)
//                        4 (0,0,1) 5 (1,0,1) 6 (1,1,1) 7 (0,1,1)
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
// Face corners, counter-clockwise when seen from outside the cube.
constexpr int kFace[6][4] = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4},
                             {3, 7, 6, 2}, {0, 4, 7, 3}, {1, 2, 6, 5}};

int edge_between(int a, int b) {
  for (int e = 0; e < 12; ++e)
    if ((kEdge[e][0] == a && kEdge[e][1] == b) || (kEdge[e][0] == b && kEdge[e][1] == a)) return e;
  return -1;
}

bool share_face(int e1, int e2) {
  for (const auto& face : kFace) {
    int hits = 0;
    for (int k = 0; k < 4; ++k) {
      const int e = edge_between(face[k], face[(k + 1) % 4]);
      hits += (e == e1) + (e == e2);
    }
    if (hits == 2) return true;
  }
  return false;
}

// On every face, each boundary crossing that enters the inside region (walking
// the face counter-clockwise) is joined to the next crossing that leaves it.
// Ambiguous faces therefore always separate their inside corners, and the
// choice depends only on the face's own corner signs, so neighbouring cubes
// agree and the surface has no cracks. The directed face segments chain into
// closed loops around the cube, which are fan-triangulated.
std::vector<std::uint8_t> triangulate_case(int mask) {
  auto inside = [mask](int c) { return (mask >> c) & 1; };
  int next[12];
  for (int& n : next) n = -1;

  for (const auto& face : kFace) {
    int crossing[4];
    bool entering[4];
    for (int k = 0; k < 4; ++k) {
      const int a = face[k], b = face[(k + 1) % 4];
      crossing[k] = inside(a) != inside(b) ? edge_between(a, b) : -1;
      entering[k] = !inside(a) && inside(b);
    }
    for (int k = 0; k < 4; ++k) {
      if (crossing[k] < 0 || !entering[k]) continue;
      for (int s = 1; s < 4; ++s) {
        const int m = (k + s) % 4;
        if (crossing[m] >= 0 && !entering[m]) {
          next[crossing[k]] = crossing[m];
          break;
        }
      }
    }
  }

  std::vector<std::uint8_t> tris;
  bool used[12] = {};
  for (int start = 0; start < 12; ++start) {
    if (next[start] < 0 || used[start]) continue;
    std::vector<int> loop;
    for (int e = start; !used[e]; e = next[e]) {
      used[e] = true;
      loop.push_back(e);
    }
    // A fan diagonal joining two crossings on the same cube face could
    // coincide with the neighbour cube's diagonal and make that mesh edge
    // non-manifold, so start the fan where no diagonal does that.
    const std::size_t n = loop.size();
    std::size_t pivot = 0;
    for (std::size_t p = 0; p < n; ++p) {
      bool ok = true;
      for (std::size_t i = 2; i + 1 < n && ok; ++i) ok = !share_face(loop[p], loop[(p + i) % n]);
      if (ok) {
        pivot = p;
        break;
      }
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      tris.push_back(static_cast<std::uint8_t>(loop[pivot]));
      tris.push_back(static_cast<std::uint8_t>(loop[(pivot + i) % n]));
      tris.push_back(static_cast<std::uint8_t>(loop[(pivot + i + 1) % n]));
    }
  }
  return tris;
}

std::array<std::vector<std::uint8_t>, 256> build_table() {
  std::array<std::vector<std::uint8_t>, 256> table;
  for (int mask = 0; mask < 256; ++mask) table[static_cast<std::size_t>(mask)] = triangulate_case(mask);
  return table;
}

}  // namespace

const std::array<std::vector<std::uint8_t>, 256>& marching_cubes_table() {
  static const auto table = build_table();
  return table;
}

DensityGrid::DensityGrid(int resolution, double side_, const Vec3& center_)
    : nx(resolution), ny(resolution), nz(resolution), side(side_), center(center_) {
  if (resolution < 1 || !(side_ > 0.0)) throw std::invalid_argument("DensityGrid: bad resolution or side");
  values.assign(static_cast<std::size_t>(resolution) * resolution * resolution, 0.0);
}

Vec3 DensityGrid::position(int i, int j, int k) const {
  const double h = spacing();
  const Vec3 origin = center - Vec3::Constant(0.5 * side);
  return origin + Vec3((i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h);
}

TriangleMesh marching_cubes(const DensityGrid& g, double iso) {
  if (g.nx < 2 || g.ny < 2 || g.nz < 2) throw std::invalid_argument("marching_cubes: resolution must be >= 2");
  if (g.values.size() != static_cast<std::size_t>(g.nx) * g.ny * g.nz)
    throw std::invalid_argument("marching_cubes: value count does not match resolution");

  const auto& table = marching_cubes_table();
  TriangleMesh mesh;
  // Grid edge key: (linear index of the lower endpoint) * 3 + axis.
  std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;

  auto vertex_on = [&](int i, int j, int k, int e) -> std::uint32_t {
    int a = kEdge[e][0], b = kEdge[e][1];
    int axis = 0;
    while (kCorner[a][axis] == kCorner[b][axis]) ++axis;
    if (kCorner[a][axis] > kCorner[b][axis]) std::swap(a, b);
    const int ai = i + kCorner[a][0], aj = j + kCorner[a][1], ak = k + kCorner[a][2];
    const int bi = i + kCorner[b][0], bj = j + kCorner[b][1], bk = k + kCorner[b][2];
    const std::uint64_t key = static_cast<std::uint64_t>(g.index(ai, aj, ak)) * 3 + static_cast<std::uint64_t>(axis);
    auto [it, fresh] = edge_vertex.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
    if (fresh) {
      const double va = g.at(ai, aj, ak), vb = g.at(bi, bj, bk);
      const double t = (iso - va) / (vb - va);
      const Vec3 pa = g.position(ai, aj, ak), pb = g.position(bi, bj, bk);
      mesh.vertices.push_back(pa + t * (pb - pa));
    }
    return it->second;
  };

  for (int k = 0; k + 1 < g.nz; ++k)
    for (int j = 0; j + 1 < g.ny; ++j)
      for (int i = 0; i + 1 < g.nx; ++i) {
        int mask = 0;
        for (int c = 0; c < 8; ++c)
          if (g.at(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]) > iso) mask |= 1 << c;
        const auto& tris = table[static_cast<std::size_t>(mask)];
        for (std::size_t t = 0; t < tris.size(); t += 3)
          mesh.triangles.push_back({vertex_on(i, j, k, tris[t]), vertex_on(i, j, k, tris[t + 1]),
                                    vertex_on(i, j, k, tris[t + 2])});
      }
  return mesh;
}

}  // namespace nbv
