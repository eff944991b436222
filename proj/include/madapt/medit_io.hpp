#pragma once

#include <string>
#include <vector>

#include "madapt/mesh.hpp"
#include "madapt/metric.hpp"

namespace madapt {

/// Reads a 2D ASCII Medit .mesh file (MeshVersionFormatted / Dimension /
/// Vertices / Edges / Triangles / End). Unknown keywords are skipped with a
/// warning on stderr; malformed sections raise errors naming the line.
Mesh read_mesh(const std::string& path);

/// Writes ASCII Medit; floating point in shortest round-trip form, so
/// write(read(write(m))) is byte-identical.
void write_mesh(const Mesh& mesh, const std::string& path);

enum class SolKind { scalar = 1, sym_tensor = 3 };

struct SolField {
  SolKind kind = SolKind::scalar;
  ScalarField scalars;          // used when kind == scalar
  MetricField tensors;          // used when kind == sym_tensor

  size_t size() const { return kind == SolKind::scalar ? scalars.size() : tensors.size(); }
};

/// Reads a .sol file (SolAtVertices). Symmetric tensor records are verified
/// SPD; expected_vertices, when nonnegative, is checked against the record
/// count.
std::vector<SolField> read_sol(const std::string& path, long expected_vertices = -1);

void write_sol(const std::string& path, const std::vector<SolField>& fields);

inline SolField make_scalar_sol(ScalarField values) {
  SolField f;
  f.kind = SolKind::scalar;
  f.scalars = std::move(values);
  return f;
}

inline SolField make_tensor_sol(MetricField values) {
  SolField f;
  f.kind = SolKind::sym_tensor;
  f.tensors = std::move(values);
  return f;
}

}  // namespace madapt
