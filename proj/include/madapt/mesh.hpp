#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "madapt/geometry.hpp"

namespace madapt {

struct Vertex {
  Vec2 position;
  int boundary_tag = 0;  // 0 = interior
};

struct Triangle {
  std::array<int, 3> v{};
  int region_tag = 0;
};

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  int tag = 0;
};

/// Conforming 2D simplicial mesh. Vertex positions are the reference
/// configuration; a deformed configuration is expressed as reference plus a
/// displacement field and never stored destructively.
struct Mesh {
  std::vector<Vertex> vertices;
  std::vector<Triangle> triangles;
  std::vector<BoundaryEdge> boundary_edges;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  const Vec2& position(int i) const { return vertices[static_cast<size_t>(i)].position; }

  VectorField positions() const;
  /// Diagonal of the axis-aligned bounding box (0 for an empty mesh).
  double bbox_diagonal() const;
};

struct Adjacency {
  std::vector<std::vector<int>> vertex_neighbors;  // sorted, symmetric
  std::vector<std::vector<int>> vertex_triangles;
  std::vector<std::array<int, 2>> edges;  // a < b, lexicographically sorted
};

struct ValidityReport {
  std::vector<int> inverted;  // triangles with signed area <= 0
  double min_area = 0.0;
  double max_area = 0.0;
  bool conforming = true;
  std::string conformity_error;
  int duplicate_vertices = 0;

  bool valid() const { return inverted.empty() && conforming && duplicate_vertices == 0; }
};

struct Rect {
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;
};

/// Neighbor/edge structure of a conforming mesh. Throws std::runtime_error
/// naming the offending edge if some edge is shared by more than two triangles.
Adjacency build_adjacency(const Mesh& mesh);

/// Checks the deformed configuration (reference + displacement, if given):
/// inverted elements, conformity, duplicate vertices. Failures are reported,
/// not thrown.
ValidityReport validate(const Mesh& mesh, const VectorField* displacement = nullptr);

/// Structured triangulation of a rectangle with cell size ~target_h and
/// alternating diagonals. Boundary edges are tagged 1..4
/// (bottom, right, top, left); boundary vertices carry tag 1.
Mesh generate_uniform(const Rect& domain, double target_h);

/// FNV-1a hash of the full adjacency structure (topology fingerprint).
std::uint64_t adjacency_hash(const Adjacency& adj);

}  // namespace madapt
