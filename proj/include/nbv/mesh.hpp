#pragma once

#include "nbv/geometry.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace nbv {

/// Scalar samples at the voxel centers of an axis-aligned cube, x fastest.
struct DensityGrid {
  int nx = 0, ny = 0, nz = 0;
  double side = 0.0;
  Vec3 center = Vec3::Zero();
  std::vector<double> values;

  DensityGrid() = default;
  DensityGrid(int resolution, double side, const Vec3& center);

  double spacing() const { return side / nx; }
  /// World position of sample (i, j, k).
  Vec3 position(int i, int j, int k) const;
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * ny + j) * nx + i;
  }
  double& at(int i, int j, int k) { return values[index(i, j, k)]; }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  bool empty() const { return triangles.empty(); }
  double area() const;
};

/// Marching cubes over `g`: the surface separates samples above `iso`
/// (inside) from samples at or below it. Crossing vertices are shared
/// between neighbouring cubes and triangles wind counter-clockwise when seen
/// from the low-value side.
TriangleMesh marching_cubes(const DensityGrid& g, double iso);

/// Raises every below-iso voxel that cannot reach the grid border through
/// below-iso voxels to the grid maximum. Returns the number of voxels raised.
std::size_t fill_cavities(DensityGrid& g, double iso);

/// The 256-entry case table used by `marching_cubes`: for each corner sign
/// mask (bit c set when corner c is inside), a flat list of edge-index
/// triples. Corner and edge numbering follow the classic Lorensen/Bourke
/// layout.
const std::array<std::vector<std::uint8_t>, 256>& marching_cubes_table();

/// Area-weighted triangle choice, then uniform barycentric sampling.
PointCloud sample_mesh_points(const TriangleMesh& m, std::size_t n, std::uint64_t seed);

/// ASCII PLY with `element vertex` and `element face`.
void write_ply(const std::string& path, const TriangleMesh& m);
TriangleMesh read_ply(const std::string& path);

}  // namespace nbv
