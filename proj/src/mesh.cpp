#include "madapt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace madapt {

double inscribed_radius(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double area = signed_area(a, b, c);
  const double perimeter = norm(b - a) + norm(c - b) + norm(a - c);
  const double scale = perimeter * perimeter;
  if (!(area > 1e-14 * scale))
    throw std::invalid_argument("inscribed_radius: degenerate triangle (area <= 0)");
  return area / (0.5 * perimeter);
}

VectorField Mesh::positions() const {
  VectorField p(vertices.size());
  for (size_t i = 0; i < vertices.size(); ++i) p[i] = vertices[i].position;
  return p;
}

double Mesh::bbox_diagonal() const {
  if (vertices.empty()) return 0.0;
  double xmin = vertices[0].position.x, xmax = xmin;
  double ymin = vertices[0].position.y, ymax = ymin;
  for (const Vertex& v : vertices) {
    xmin = std::min(xmin, v.position.x);
    xmax = std::max(xmax, v.position.x);
    ymin = std::min(ymin, v.position.y);
    ymax = std::max(ymax, v.position.y);
  }
  return std::hypot(xmax - xmin, ymax - ymin);
}

namespace {

std::array<int, 2> sorted_edge(int a, int b) {
  return a < b ? std::array<int, 2>{a, b} : std::array<int, 2>{b, a};
}

void check_triangle_indices(const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<size_t>(t)].v;
    for (int k = 0; k < 3; ++k) {
      if (tri[static_cast<size_t>(k)] < 0 || tri[static_cast<size_t>(k)] >= nv)
        throw std::runtime_error("mesh: triangle " + std::to_string(t) +
                                 " has out-of-range vertex index");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw std::runtime_error("mesh: triangle " + std::to_string(t) +
                               " has repeated vertex indices");
  }
}

}  // namespace

Adjacency build_adjacency(const Mesh& mesh) {
  check_triangle_indices(mesh);
  const int nv = mesh.num_vertices();

  Adjacency adj;
  adj.vertex_neighbors.resize(static_cast<size_t>(nv));
  adj.vertex_triangles.resize(static_cast<size_t>(nv));

  std::map<std::array<int, 2>, int> edge_count;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<size_t>(t)].v;
    for (int k = 0; k < 3; ++k) {
      const int a = tri[static_cast<size_t>(k)];
      const int b = tri[static_cast<size_t>((k + 1) % 3)];
      const auto e = sorted_edge(a, b);
      const int count = ++edge_count[e];
      if (count > 2)
        throw std::runtime_error("build_adjacency: non-conforming mesh, edge (" +
                                 std::to_string(e[0]) + "," + std::to_string(e[1]) +
                                 ") shared by more than two triangles");
      adj.vertex_triangles[static_cast<size_t>(a)].push_back(t);
    }
  }
  for (auto& list : adj.vertex_triangles) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  adj.edges.reserve(edge_count.size());
  for (const auto& [e, count] : edge_count) {
    (void)count;
    adj.edges.push_back(e);
    adj.vertex_neighbors[static_cast<size_t>(e[0])].push_back(e[1]);
    adj.vertex_neighbors[static_cast<size_t>(e[1])].push_back(e[0]);
  }
  for (auto& list : adj.vertex_neighbors) std::sort(list.begin(), list.end());
  return adj;
}

ValidityReport validate(const Mesh& mesh, const VectorField* displacement) {
  ValidityReport report;
  if (displacement && displacement->size() != mesh.vertices.size()) {
    report.conforming = false;
    report.conformity_error = "displacement length does not match vertex count";
    return report;
  }

  auto pos = [&](int i) -> Vec2 {
    const Vec2 p = mesh.position(i);
    return displacement ? p + (*displacement)[static_cast<size_t>(i)] : p;
  };

  report.min_area = std::numeric_limits<double>::infinity();
  report.max_area = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<size_t>(t)].v;
    const double area = signed_area(pos(tri[0]), pos(tri[1]), pos(tri[2]));
    report.min_area = std::min(report.min_area, area);
    report.max_area = std::max(report.max_area, area);
    if (area <= 0.0) report.inverted.push_back(t);
  }
  if (mesh.num_triangles() == 0) report.min_area = report.max_area = 0.0;

  // Conformity: interior edges in exactly two triangles, boundary edges in one
  // and listed.
  try {
    check_triangle_indices(mesh);
  } catch (const std::exception& e) {
    report.conforming = false;
    report.conformity_error = e.what();
    return report;
  }
  std::map<std::array<int, 2>, int> edge_count;
  for (const Triangle& tri : mesh.triangles)
    for (int k = 0; k < 3; ++k)
      ++edge_count[sorted_edge(tri.v[static_cast<size_t>(k)], tri.v[static_cast<size_t>((k + 1) % 3)])];

  std::map<std::array<int, 2>, int> listed_boundary;
  for (const BoundaryEdge& e : mesh.boundary_edges) ++listed_boundary[sorted_edge(e.a, e.b)];

  for (const auto& [e, count] : edge_count) {
    const bool listed = listed_boundary.count(e) > 0;
    if (count > 2) {
      report.conforming = false;
      report.conformity_error = "edge (" + std::to_string(e[0]) + "," + std::to_string(e[1]) +
                                ") shared by " + std::to_string(count) + " triangles";
      break;
    }
    if (count == 1 && !listed) {
      report.conforming = false;
      report.conformity_error = "edge (" + std::to_string(e[0]) + "," + std::to_string(e[1]) +
                                ") lies on the boundary but is not listed";
      break;
    }
    if (count == 2 && listed) {
      report.conforming = false;
      report.conformity_error = "interior edge (" + std::to_string(e[0]) + "," +
                                std::to_string(e[1]) + ") listed as boundary";
      break;
    }
  }
  if (report.conforming) {
    for (const auto& [e, n] : listed_boundary) {
      (void)n;
      if (!edge_count.count(e)) {
        report.conforming = false;
        report.conformity_error = "boundary edge (" + std::to_string(e[0]) + "," +
                                  std::to_string(e[1]) + ") belongs to no triangle";
        break;
      }
    }
  }

  // Duplicate vertices within 1e-12 of the bounding-box diagonal.
  const double tol = 1e-12 * mesh.bbox_diagonal();
  if (tol > 0.0) {
    const double cell = std::max(tol, 1e-300);
    auto key = [cell](const Vec2& p) {
      const auto qx = static_cast<long long>(std::floor(p.x / cell));
      const auto qy = static_cast<long long>(std::floor(p.y / cell));
      return (static_cast<unsigned long long>(qx) << 32) ^ static_cast<unsigned long long>(qy + 0x9e3779b9LL);
    };
    std::unordered_map<unsigned long long, std::vector<int>> grid;
    for (int i = 0; i < mesh.num_vertices(); ++i) grid[key(mesh.position(i))].push_back(i);
    for (int i = 0; i < mesh.num_vertices(); ++i) {
      const Vec2 p = mesh.position(i);
      for (long long dx = -1; dx <= 1; ++dx)
        for (long long dy = -1; dy <= 1; ++dy) {
          const Vec2 probe{p.x + static_cast<double>(dx) * cell, p.y + static_cast<double>(dy) * cell};
          auto it = grid.find(key(probe));
          if (it == grid.end()) continue;
          for (int j : it->second)
            if (j > i && norm(mesh.position(j) - p) < tol) ++report.duplicate_vertices;
        }
    }
  }
  return report;
}

Mesh generate_uniform(const Rect& domain, double target_h) {
  if (!(target_h > 0.0)) throw std::invalid_argument("generate_uniform: target_h must be > 0");
  const double lx = domain.x1 - domain.x0;
  const double ly = domain.y1 - domain.y0;
  if (!(lx > 0.0) || !(ly > 0.0))
    throw std::invalid_argument("generate_uniform: empty domain");

  const int nx = std::max(1, static_cast<int>(std::llround(lx / target_h)));
  const int ny = std::max(1, static_cast<int>(std::llround(ly / target_h)));
  const double dx = lx / nx;
  const double dy = ly / ny;

  Mesh mesh;
  mesh.vertices.reserve(static_cast<size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      Vertex v;
      // Corner vertices land exactly on the domain corners.
      v.position.x = (i == nx) ? domain.x1 : domain.x0 + i * dx;
      v.position.y = (j == ny) ? domain.y1 : domain.y0 + j * dy;
      v.boundary_tag = (i == 0 || i == nx || j == 0 || j == ny) ? 1 : 0;
      mesh.vertices.push_back(v);
    }

  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  mesh.triangles.reserve(static_cast<size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int ll = vid(i, j), lr = vid(i + 1, j);
      const int ul = vid(i, j + 1), ur = vid(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({{ll, lr, ur}, 0});
        mesh.triangles.push_back({{ll, ur, ul}, 0});
      } else {
        mesh.triangles.push_back({{ll, lr, ul}, 0});
        mesh.triangles.push_back({{lr, ur, ul}, 0});
      }
    }

  for (int i = 0; i < nx; ++i) {
    mesh.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), 1});       // bottom
    mesh.boundary_edges.push_back({vid(i + 1, ny), vid(i, ny), 3});     // top
  }
  for (int j = 0; j < ny; ++j) {
    mesh.boundary_edges.push_back({vid(nx, j), vid(nx, j + 1), 2});     // right
    mesh.boundary_edges.push_back({vid(0, j + 1), vid(0, j), 4});       // left
  }
  return mesh;
}

std::uint64_t adjacency_hash(const Adjacency& adj) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(adj.vertex_neighbors.size());
  for (const auto& list : adj.vertex_neighbors) {
    mix(list.size());
    for (int v : list) mix(static_cast<std::uint64_t>(v));
  }
  mix(adj.vertex_triangles.size());
  for (const auto& list : adj.vertex_triangles) {
    mix(list.size());
    for (int t : list) mix(static_cast<std::uint64_t>(t));
  }
  mix(adj.edges.size());
  for (const auto& e : adj.edges) {
    mix(static_cast<std::uint64_t>(e[0]));
    mix(static_cast<std::uint64_t>(e[1]));
  }
  return h;
}

}  // namespace madapt
