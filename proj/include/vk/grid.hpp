// Structured 2D/3D grids with a two-part boundary split, and nodal fields.
#pragma once

#include <array>
#include <ostream>
#include <string>

#include "vk/common.hpp"

namespace vk {

enum class BoundaryPart { Gamma0, GammaT };

// Edge order: west (x=0), east (x=lx), south (y=0), north (y=ly).
enum class Edge : int { West = 0, East = 1, South = 2, North = 3 };

struct Grid2 {
  int nx = 0, ny = 0;
  double lx = 0.0, ly = 0.0;
  double hx = 0.0, hy = 0.0;
  std::array<BoundaryPart, 4> edge = {BoundaryPart::Gamma0, BoundaryPart::Gamma0,
                                      BoundaryPart::Gamma0, BoundaryPart::Gamma0};

  static Grid2 make(int nx, int ny, double lx, double ly,
                    std::array<BoundaryPart, 4> edge = {
                        BoundaryPart::Gamma0, BoundaryPart::Gamma0,
                        BoundaryPart::Gamma0, BoundaryPart::Gamma0}) {
    if (nx < 5 || ny < 5)
      throw StencilError("grid needs at least 5 nodes per axis, got " +
                         std::to_string(nx) + "x" + std::to_string(ny));
    if (!(lx > 0.0) || !(ly > 0.0))
      throw ConfigError("grid side lengths must be positive");
    Grid2 g;
    g.nx = nx;
    g.ny = ny;
    g.lx = lx;
    g.ly = ly;
    g.hx = lx / (nx - 1);
    g.hy = ly / (ny - 1);
    g.edge = edge;
    if (!g.has_part(BoundaryPart::Gamma0))
      throw ConfigError("the displacement-pinned boundary part must be nonempty");
    return g;
  }

  double x(int i) const { return i * hx; }
  double y(int j) const { return j * hy; }

  bool edge_clamped(Edge e) const {
    return edge[static_cast<int>(e)] == BoundaryPart::Gamma0;
  }

  bool has_part(BoundaryPart p) const {
    for (const auto e : edge)
      if (e == p) return true;
    return false;
  }

  bool is_boundary(int i, int j) const {
    return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
  }

  // Pinned wins at corners, so the pinned part is closed.
  BoundaryPart part_of(int i, int j) const {
    if ((i == 0 && edge_clamped(Edge::West)) ||
        (i == nx - 1 && edge_clamped(Edge::East)) ||
        (j == 0 && edge_clamped(Edge::South)) ||
        (j == ny - 1 && edge_clamped(Edge::North)))
      return BoundaryPart::Gamma0;
    return BoundaryPart::GammaT;
  }

  bool pinned(int i, int j) const {
    return is_boundary(i, j) && part_of(i, j) == BoundaryPart::Gamma0;
  }
};

template <class S = double>
struct ScalarField2 {
  DenseMat<S> v;

  static ScalarField2 zero(const Grid2& g) {
    return {DenseMat<S>::Zero(g.nx, g.ny)};
  }
  static ScalarField2 constant(const Grid2& g, S c) {
    return {DenseMat<S>::Constant(g.nx, g.ny, c)};
  }
};

template <class S = double>
struct VectorField2 {
  DenseMat<S> x, y;

  static VectorField2 zero(const Grid2& g) {
    return {DenseMat<S>::Zero(g.nx, g.ny), DenseMat<S>::Zero(g.nx, g.ny)};
  }
};

template <class S = double>
struct SymTensorField2 {
  DenseMat<S> t11, t22, t12;

  static SymTensorField2 zero(const Grid2& g) {
    return {DenseMat<S>::Zero(g.nx, g.ny), DenseMat<S>::Zero(g.nx, g.ny),
            DenseMat<S>::Zero(g.nx, g.ny)};
  }
};

template <class S>
void write_csv(const Grid2& g, const ScalarField2<S>& f, std::ostream& os) {
  os << "x,y,value\n";
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      os << g.x(i) << "," << g.y(j) << "," << f.v(i, j) << "\n";
}

// Face order: xmin, xmax, ymin, ymax, zmin, zmax.
enum class Face : int { XMin = 0, XMax = 1, YMin = 2, YMax = 3, ZMin = 4, ZMax = 5 };

struct Grid3 {
  int nx = 0, ny = 0, nz = 0;
  double lx = 0.0, ly = 0.0, lz = 0.0;
  double hx = 0.0, hy = 0.0, hz = 0.0;
  std::array<BoundaryPart, 6> face = {BoundaryPart::Gamma0, BoundaryPart::Gamma0,
                                      BoundaryPart::Gamma0, BoundaryPart::Gamma0,
                                      BoundaryPart::Gamma0, BoundaryPart::Gamma0};

  static Grid3 make(int nx, int ny, int nz, double lx, double ly, double lz,
                    std::array<BoundaryPart, 6> face = {
                        BoundaryPart::Gamma0, BoundaryPart::Gamma0,
                        BoundaryPart::Gamma0, BoundaryPart::Gamma0,
                        BoundaryPart::Gamma0, BoundaryPart::Gamma0}) {
    if (nx < 5 || ny < 5 || nz < 5)
      throw StencilError("grid needs at least 5 nodes per axis");
    if (nx > 17 || ny > 17 || nz > 17)
      throw ConfigError("3D grids are capped at 17 nodes per axis");
    if (!(lx > 0.0) || !(ly > 0.0) || !(lz > 0.0))
      throw ConfigError("grid side lengths must be positive");
    Grid3 g;
    g.nx = nx;
    g.ny = ny;
    g.nz = nz;
    g.lx = lx;
    g.ly = ly;
    g.lz = lz;
    g.hx = lx / (nx - 1);
    g.hy = ly / (ny - 1);
    g.hz = lz / (nz - 1);
    g.face = face;
    if (!g.has_part(BoundaryPart::Gamma0))
      throw ConfigError("the displacement-pinned boundary part must be nonempty");
    return g;
  }

  double x(int i) const { return i * hx; }
  double y(int j) const { return j * hy; }
  double z(int k) const { return k * hz; }

  bool has_part(BoundaryPart p) const {
    for (const auto f : face)
      if (f == p) return true;
    return false;
  }

  bool is_boundary(int i, int j, int k) const {
    return i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1;
  }

  BoundaryPart part_of(int i, int j, int k) const {
    auto clamped = [&](Face f) {
      return face[static_cast<int>(f)] == BoundaryPart::Gamma0;
    };
    if ((i == 0 && clamped(Face::XMin)) || (i == nx - 1 && clamped(Face::XMax)) ||
        (j == 0 && clamped(Face::YMin)) || (j == ny - 1 && clamped(Face::YMax)) ||
        (k == 0 && clamped(Face::ZMin)) || (k == nz - 1 && clamped(Face::ZMax)))
      return BoundaryPart::Gamma0;
    return BoundaryPart::GammaT;
  }

  bool pinned(int i, int j, int k) const {
    return is_boundary(i, j, k) && part_of(i, j, k) == BoundaryPart::Gamma0;
  }
};

// z-slabs of x-by-y matrices; slab(k)(i,j) is the value at node (i,j,k).
template <class S = double>
struct ScalarField3 {
  std::vector<DenseMat<S>> slab;

  static ScalarField3 zero(const Grid3& g) {
    return {std::vector<DenseMat<S>>(g.nz, DenseMat<S>::Zero(g.nx, g.ny))};
  }

  static ScalarField3 constant(const Grid3& g, S c) {
    return {std::vector<DenseMat<S>>(g.nz, DenseMat<S>::Constant(g.nx, g.ny, c))};
  }

  S& at(int i, int j, int k) { return slab[k](i, j); }
  S at(int i, int j, int k) const { return slab[k](i, j); }
};

}  // namespace vk
