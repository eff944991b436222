#include "madapt/medit_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "madapt/num_format.hpp"

namespace madapt {

namespace {

struct LineReader {
  std::ifstream in;
  std::string path;
  long line_number = 0;
  std::istringstream current;

  explicit LineReader(const std::string& p) : in(p), path(p) {
    if (!in) throw std::runtime_error("cannot open '" + p + "'");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error(path + ":" + std::to_string(line_number) + ": " + what);
  }

  /// Next whitespace-separated token, skipping blank lines and '#' comments.
  bool next_token(std::string& tok) {
    for (;;) {
      if (current >> tok) {
        if (tok[0] == '#') {
          current.str("");
          current.clear();
          continue;
        }
        return true;
      }
      std::string line;
      if (!std::getline(in, line)) return false;
      ++line_number;
      current.str(line);
      current.clear();
    }
  }

  std::string require_token(const char* what) {
    std::string tok;
    if (!next_token(tok)) fail(std::string("unexpected end of file, expected ") + what);
    return tok;
  }

  long require_long(const char* what) {
    const std::string tok = require_token(what);
    try {
      size_t pos = 0;
      const long v = std::stol(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      fail(std::string("expected integer for ") + what + ", got '" + tok + "'");
    }
  }

  double require_double(const char* what) {
    const std::string tok = require_token(what);
    try {
      size_t pos = 0;
      const double v = std::stod(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      fail(std::string("expected number for ") + what + ", got '" + tok + "'");
    }
  }
};

bool is_keyword(const std::string& tok) {
  return !tok.empty() && std::isalpha(static_cast<unsigned char>(tok[0]));
}

/// Skips a section of non-keyword tokens; leaves the follow-up keyword (if
/// any) in tok. Returns false at end of file.
bool skip_unknown_section(LineReader& reader, std::string& tok) {
  std::fprintf(stderr, "warning: %s:%ld: skipping unknown keyword '%s'\n", reader.path.c_str(),
               reader.line_number, tok.c_str());
  while (reader.next_token(tok))
    if (is_keyword(tok)) return true;
  return false;
}

}  // namespace

Mesh read_mesh(const std::string& path) {
  LineReader reader(path);
  Mesh mesh;

  std::string tok;
  bool have_tok = reader.next_token(tok);
  while (have_tok) {
    if (tok == "End") break;
    if (tok == "MeshVersionFormatted") {
      reader.require_long("format version");
    } else if (tok == "Dimension") {
      const long dim = reader.require_long("dimension");
      if (dim != 2) reader.fail("unsupported dimension " + std::to_string(dim) + ", expected 2");
    } else if (tok == "Vertices") {
      const long n = reader.require_long("vertex count");
      if (n < 0) reader.fail("negative vertex count");
      mesh.vertices.resize(static_cast<size_t>(n));
      for (long i = 0; i < n; ++i) {
        Vertex& v = mesh.vertices[static_cast<size_t>(i)];
        v.position.x = reader.require_double("vertex x");
        v.position.y = reader.require_double("vertex y");
        v.boundary_tag = static_cast<int>(reader.require_long("vertex tag"));
      }
    } else if (tok == "Edges") {
      const long n = reader.require_long("edge count");
      if (n < 0) reader.fail("negative edge count");
      mesh.boundary_edges.resize(static_cast<size_t>(n));
      for (long i = 0; i < n; ++i) {
        BoundaryEdge& e = mesh.boundary_edges[static_cast<size_t>(i)];
        e.a = static_cast<int>(reader.require_long("edge vertex") - 1);
        e.b = static_cast<int>(reader.require_long("edge vertex") - 1);
        e.tag = static_cast<int>(reader.require_long("edge tag"));
      }
    } else if (tok == "Triangles") {
      const long n = reader.require_long("triangle count");
      if (n < 0) reader.fail("negative triangle count");
      mesh.triangles.resize(static_cast<size_t>(n));
      for (long i = 0; i < n; ++i) {
        Triangle& t = mesh.triangles[static_cast<size_t>(i)];
        for (int k = 0; k < 3; ++k)
          t.v[static_cast<size_t>(k)] = static_cast<int>(reader.require_long("triangle vertex") - 1);
        t.region_tag = static_cast<int>(reader.require_long("triangle tag"));
      }
    } else if (is_keyword(tok)) {
      have_tok = skip_unknown_section(reader, tok);
      continue;
    } else {
      reader.fail("unexpected token '" + tok + "'");
    }
    have_tok = reader.next_token(tok);
  }

  const long nv = mesh.num_vertices();
  for (const Triangle& t : mesh.triangles)
    for (int k = 0; k < 3; ++k)
      if (t.v[static_cast<size_t>(k)] < 0 || t.v[static_cast<size_t>(k)] >= nv)
        throw std::runtime_error(path + ": triangle vertex index out of range");
  for (const BoundaryEdge& e : mesh.boundary_edges)
    if (e.a < 0 || e.a >= nv || e.b < 0 || e.b >= nv)
      throw std::runtime_error(path + ": edge vertex index out of range");
  return mesh;
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "MeshVersionFormatted 2\nDimension 2\n";

  out << "Vertices\n" << mesh.vertices.size() << '\n';
  for (const Vertex& v : mesh.vertices)
    out << format_double(v.position.x) << ' ' << format_double(v.position.y) << ' '
        << v.boundary_tag << '\n';

  out << "Edges\n" << mesh.boundary_edges.size() << '\n';
  for (const BoundaryEdge& e : mesh.boundary_edges)
    out << e.a + 1 << ' ' << e.b + 1 << ' ' << e.tag << '\n';

  out << "Triangles\n" << mesh.triangles.size() << '\n';
  for (const Triangle& t : mesh.triangles)
    out << t.v[0] + 1 << ' ' << t.v[1] + 1 << ' ' << t.v[2] + 1 << ' ' << t.region_tag << '\n';

  out << "End\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<SolField> read_sol(const std::string& path, long expected_vertices) {
  LineReader reader(path);
  std::vector<SolField> fields;
  bool saw_records = false;

  std::string tok;
  bool have_tok = reader.next_token(tok);
  while (have_tok) {
    if (tok == "End") break;
    if (tok == "MeshVersionFormatted") {
      reader.require_long("format version");
    } else if (tok == "Dimension") {
      const long dim = reader.require_long("dimension");
      if (dim != 2) reader.fail("unsupported dimension " + std::to_string(dim) + ", expected 2");
    } else if (tok == "SolAtVertices") {
      const long n = reader.require_long("record count");
      if (n < 0) reader.fail("negative record count");
      if (expected_vertices >= 0 && n != expected_vertices)
        reader.fail("record count " + std::to_string(n) + " does not match mesh vertex count " +
                    std::to_string(expected_vertices));
      const long nfields = reader.require_long("field count");
      if (nfields < 1) reader.fail("need at least one field");
      fields.resize(static_cast<size_t>(nfields));
      for (long f = 0; f < nfields; ++f) {
        const long code = reader.require_long("field type code");
        if (code == 1)
          fields[static_cast<size_t>(f)].kind = SolKind::scalar;
        else if (code == 3)
          fields[static_cast<size_t>(f)].kind = SolKind::sym_tensor;
        else
          reader.fail("unsupported solution type code " + std::to_string(code));
      }
      for (auto& f : fields) {
        if (f.kind == SolKind::scalar)
          f.scalars.resize(static_cast<size_t>(n));
        else
          f.tensors.resize(static_cast<size_t>(n));
      }
      for (long i = 0; i < n; ++i) {
        for (auto& f : fields) {
          if (f.kind == SolKind::scalar) {
            f.scalars[static_cast<size_t>(i)] = reader.require_double("scalar value");
          } else {
            SpdTensor2& m = f.tensors[static_cast<size_t>(i)];
            m.m11 = reader.require_double("tensor m11");
            m.m12 = reader.require_double("tensor m12");
            m.m22 = reader.require_double("tensor m22");
            if (!m.is_spd())
              reader.fail("tensor record " + std::to_string(i + 1) +
                          " is not symmetric positive definite");
          }
        }
      }
      saw_records = true;
    } else if (is_keyword(tok)) {
      have_tok = skip_unknown_section(reader, tok);
      continue;
    } else {
      reader.fail("unexpected token '" + tok + "'");
    }
    have_tok = reader.next_token(tok);
  }
  if (!saw_records) throw std::runtime_error(path + ": no SolAtVertices section");
  return fields;
}

void write_sol(const std::string& path, const std::vector<SolField>& fields) {
  if (fields.empty()) throw std::invalid_argument("write_sol: no fields");
  const size_t n = fields.front().size();
  for (const SolField& f : fields)
    if (f.size() != n) throw std::invalid_argument("write_sol: fields differ in length");

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "MeshVersionFormatted 2\nDimension 2\n";
  out << "SolAtVertices\n" << n << '\n';
  out << fields.size();
  for (const SolField& f : fields) out << ' ' << static_cast<int>(f.kind);
  out << '\n';
  for (size_t i = 0; i < n; ++i) {
    bool first = true;
    for (const SolField& f : fields) {
      if (!first) out << ' ';
      first = false;
      if (f.kind == SolKind::scalar) {
        out << format_double(f.scalars[i]);
      } else {
        const SpdTensor2& m = f.tensors[i];
        out << format_double(m.m11) << ' ' << format_double(m.m12) << ' ' << format_double(m.m22);
      }
    }
    out << '\n';
  }
  out << "End\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace madapt
