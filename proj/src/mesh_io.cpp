#include "volball/mesh_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

namespace volball {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

// Whitespace tokenizer that drops '#' comments.
class Tokens {
 public:
  explicit Tokens(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    while (true) {
      if (in_ >> tok) {
        if (tok[0] == '#') {
          std::string rest;
          std::getline(in_, rest);
          continue;
        }
        return true;
      }
      return false;
    }
  }
  std::string expect(const char* what) {
    std::string tok;
    if (!next(tok)) throw ParseError(std::string("unexpected end of file reading ") + what);
    return tok;
  }
  long integer(const char* what) {
    const std::string tok = expect(what);
    try {
      size_t used = 0;
      const long v = std::stol(tok, &used);
      if (used != tok.size()) throw ParseError("");
      return v;
    } catch (const std::exception&) {
      throw ParseError(std::string("expected integer for ") + what + ", got '" + tok + "'");
    }
  }
  double real(const char* what) {
    const std::string tok = expect(what);
    try {
      size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw ParseError("");
      return v;
    } catch (const std::exception&) {
      throw ParseError(std::string("expected number for ") + what + ", got '" + tok + "'");
    }
  }

 private:
  std::istream& in_;
};

RawMesh read_medit(std::istream& in) {
  // Entries per record (including the trailing reference) of sections we skip.
  static const std::map<std::string, int> kSkipped = {
      {"Edges", 3},        {"Triangles", 4},       {"Quadrilaterals", 5}, {"Hexahedra", 9},
      {"Corners", 1},      {"RequiredVertices", 1}, {"Ridges", 1},        {"RequiredEdges", 1},
      {"Normals", 3},      {"Tangents", 3},         {"NormalAtVertices", 2}, {"TangentAtVertices", 2},
      {"Prisms", 7},       {"Pyramids", 6}};
  Tokens tk(in);
  RawMesh mesh;
  bool have_vertices = false;
  std::string tok;
  while (tk.next(tok)) {
    if (tok == "MeshVersionFormatted") {
      tk.integer("version");
    } else if (tok == "Dimension") {
      if (tk.integer("dimension") != 3) throw ParseError("only 3D medit meshes are supported");
    } else if (tok == "Vertices") {
      const long n = tk.integer("vertex count");
      if (n < 0) throw ParseError("negative vertex count");
      mesh.vertices.resize(n);
      for (long i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) mesh.vertices[i][k] = tk.real("vertex coordinate");
        tk.integer("vertex reference");
      }
      have_vertices = true;
    } else if (tok == "Tetrahedra") {
      const long n = tk.integer("tet count");
      if (n < 0) throw ParseError("negative tet count");
      mesh.tets.resize(n);
      for (long i = 0; i < n; ++i) {
        for (int k = 0; k < 4; ++k) mesh.tets[i][k] = static_cast<int>(tk.integer("tet vertex")) - 1;
        tk.integer("tet reference");
      }
    } else if (auto it = kSkipped.find(tok); it != kSkipped.end()) {
      const long n = tk.integer("record count");
      for (long i = 0; i < n * it->second; ++i) tk.expect("record");
    } else if (tok == "End") {
      break;
    } else {
      throw ParseError("unknown medit keyword '" + tok + "'");
    }
  }
  if (!have_vertices) throw ParseError("medit file has no Vertices section");
  return mesh;
}

int gmsh_nodes_per_element(long type) {
  static const std::map<long, int> kNodes = {{1, 2}, {2, 3}, {3, 4}, {4, 4}, {5, 8}, {6, 6}, {7, 5},
                                             {8, 3}, {9, 6}, {10, 9}, {11, 10}, {15, 1}};
  auto it = kNodes.find(type);
  if (it == kNodes.end()) throw ParseError("unsupported gmsh element type " + std::to_string(type));
  return it->second;
}

RawMesh read_gmsh2(std::istream& in) {
  Tokens tk(in);
  RawMesh mesh;
  std::unordered_map<long, int> node_index;
  bool have_format = false, have_nodes = false;
  std::string tok;
  while (tk.next(tok)) {
    if (tok == "$MeshFormat") {
      const std::string version = tk.expect("version");
      if (version.rfind("2", 0) != 0) throw ParseError("unsupported gmsh version " + version);
      if (tk.integer("file type") != 0) throw ParseError("binary gmsh files are not supported");
      tk.integer("data size");
      if (tk.expect("$EndMeshFormat") != "$EndMeshFormat") throw ParseError("malformed $MeshFormat");
      have_format = true;
    } else if (tok == "$Nodes") {
      const long n = tk.integer("node count");
      mesh.vertices.resize(n);
      for (long i = 0; i < n; ++i) {
        const long id = tk.integer("node id");
        if (!node_index.emplace(id, static_cast<int>(i)).second)
          throw ParseError("duplicate node id " + std::to_string(id));
        for (int k = 0; k < 3; ++k) mesh.vertices[i][k] = tk.real("node coordinate");
      }
      if (tk.expect("$EndNodes") != "$EndNodes") throw ParseError("malformed $Nodes");
      have_nodes = true;
    } else if (tok == "$Elements") {
      if (!have_nodes) throw ParseError("$Elements before $Nodes");
      const long n = tk.integer("element count");
      for (long i = 0; i < n; ++i) {
        tk.integer("element id");
        const long type = tk.integer("element type");
        const long ntags = tk.integer("tag count");
        for (long j = 0; j < ntags; ++j) tk.integer("tag");
        const int nn = gmsh_nodes_per_element(type);
        Tet t{};
        for (int j = 0; j < nn; ++j) {
          const long id = tk.integer("element node");
          auto it = node_index.find(id);
          if (it == node_index.end()) throw ParseError("element references unknown node " + std::to_string(id));
          if (type == 4) t[j] = it->second;
        }
        if (type == 4) mesh.tets.push_back(t);
      }
      if (tk.expect("$EndElements") != "$EndElements") throw ParseError("malformed $Elements");
    } else if (tok.size() > 1 && tok[0] == '$' && tok.rfind("$End", 0) != 0) {
      const std::string end = "$End" + tok.substr(1);
      std::string skip;
      while (true) {
        if (!tk.next(skip)) throw ParseError("unterminated section " + tok);
        if (skip == end) break;
      }
    } else {
      throw ParseError("unexpected token '" + tok + "' in gmsh file");
    }
  }
  if (!have_format) throw ParseError("missing $MeshFormat");
  if (!have_nodes) throw ParseError("missing $Nodes");
  return mesh;
}

void write_medit(std::ostream& out, const Points& v, const std::vector<Tet>& tets) {
  out << "MeshVersionFormatted 2\nDimension 3\n\nVertices\n" << v.size() << "\n";
  for (const auto& p : v) out << p.x() << " " << p.y() << " " << p.z() << " 0\n";
  out << "\nTetrahedra\n" << tets.size() << "\n";
  for (const auto& t : tets) out << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << " " << t[3] + 1 << " 0\n";
  out << "\nEnd\n";
}

void write_gmsh2(std::ostream& out, const Points& v, const std::vector<Tet>& tets) {
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n" << v.size() << "\n";
  for (size_t i = 0; i < v.size(); ++i) out << i + 1 << " " << v[i].x() << " " << v[i].y() << " " << v[i].z() << "\n";
  out << "$EndNodes\n$Elements\n" << tets.size() << "\n";
  for (size_t i = 0; i < tets.size(); ++i) {
    const auto& t = tets[i];
    out << i + 1 << " 4 2 0 0 " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << " " << t[3] + 1 << "\n";
  }
  out << "$EndElements\n";
}

void write_vtk(std::ostream& out, const Points& v, const std::vector<Tet>& tets,
               const std::vector<CellScalars>& cell_data) {
  out << "# vtk DataFile Version 3.0\nvolball tetrahedral mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << v.size() << " double\n";
  for (const auto& p : v) out << p.x() << " " << p.y() << " " << p.z() << "\n";
  out << "CELLS " << tets.size() << " " << 5 * tets.size() << "\n";
  for (const auto& t : tets) out << "4 " << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
  out << "CELL_TYPES " << tets.size() << "\n";
  for (size_t i = 0; i < tets.size(); ++i) out << "10\n";
  if (!cell_data.empty()) {
    out << "CELL_DATA " << tets.size() << "\n";
    for (const auto& field : cell_data) {
      if (field.values.size() != tets.size()) throw ParseError("cell data '" + field.name + "' has wrong length");
      out << "SCALARS " << field.name << " double 1\nLOOKUP_TABLE default\n";
      for (double x : field.values) out << x << "\n";
    }
  }
}

}  // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".mesh") return MeshFormat::medit;
  if (ext == ".msh") return MeshFormat::gmsh2;
  if (ext == ".vtk") return MeshFormat::vtk;
  throw ParseError("cannot infer mesh format from extension '" + ext + "'");
}

MeshFormat parse_format(const std::string& name) {
  if (name == "medit") return MeshFormat::medit;
  if (name == "gmsh2" || name == "gmsh") return MeshFormat::gmsh2;
  if (name == "vtk") return MeshFormat::vtk;
  throw ParseError("unknown mesh format '" + name + "'");
}

RawMesh load_raw_mesh(const std::filesystem::path& path, MeshFormat format) {
  std::ifstream in = open_input(path);
  switch (format) {
    case MeshFormat::medit:
      return read_medit(in);
    case MeshFormat::gmsh2:
      return read_gmsh2(in);
    case MeshFormat::vtk:
      break;
  }
  throw ParseError("reading VTK meshes is not supported");
}

RawMesh load_raw_mesh(const std::filesystem::path& path) { return load_raw_mesh(path, format_from_path(path)); }

TetMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  RawMesh raw = load_raw_mesh(path, format);
  return TetMesh(std::move(raw.vertices), std::move(raw.tets));
}

TetMesh load_mesh(const std::filesystem::path& path) { return load_mesh(path, format_from_path(path)); }

void save_mesh(const std::filesystem::path& path, const Points& vertices, const std::vector<Tet>& tets,
               MeshFormat format, const std::vector<CellScalars>& cell_data) {
  std::ofstream out = open_output(path);
  switch (format) {
    case MeshFormat::medit:
      write_medit(out, vertices, tets);
      break;
    case MeshFormat::gmsh2:
      write_gmsh2(out, vertices, tets);
      break;
    case MeshFormat::vtk:
      write_vtk(out, vertices, tets, cell_data);
      break;
  }
  if (!out) throw ParseError("failed writing " + path.string());
}

void save_mesh(const std::filesystem::path& path, const Points& vertices, const std::vector<Tet>& tets) {
  save_mesh(path, vertices, tets, format_from_path(path));
}

PopulationData load_population_csv(const std::filesystem::path& path, int num_tets, int num_vertices) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty population file");
  line.erase(std::remove_if(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\r'; }), line.end());
  PopulationData data;
  int count = 0;
  if (line == "tet_index,population") {
    data.kind = PopulationData::Kind::tet_population;
    count = num_tets;
  } else if (line == "vertex_index,density") {
    data.kind = PopulationData::Kind::vertex_density;
    count = num_vertices;
  } else {
    throw ParseError("population header must be 'tet_index,population' or 'vertex_index,density'");
  }
  data.values.assign(count, 0.0);
  std::vector<char> seen(count, 0);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    long idx;
    double val;
    std::string extra;
    if (!(row >> idx >> val) || (row >> extra))
      throw ParseError("malformed population row at line " + std::to_string(line_no));
    if (idx < 0 || idx >= count) throw ParseError("population index out of range at line " + std::to_string(line_no));
    if (seen[idx]) throw ParseError("duplicate population index " + std::to_string(idx));
    if (!(val > 0.0) || !std::isfinite(val))
      throw ParseError("population values must be positive (line " + std::to_string(line_no) + ")");
    seen[idx] = 1;
    data.values[idx] = val;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw ParseError("population file does not cover every index");
  return data;
}

void save_population_csv(const std::filesystem::path& path, const std::vector<double>& population) {
  std::ofstream out = open_output(path);
  out << "tet_index,population\n";
  for (size_t i = 0; i < population.size(); ++i) out << i << "," << population[i] << "\n";
}

}  // namespace volball
