#pragma once

#include <filesystem>
#include <string>

#include "volball/mesh.hpp"

namespace volball {

enum class MeshFormat { medit, gmsh2, vtk };

/// Guess the format from the file extension (.mesh, .msh, .vtk).
MeshFormat format_from_path(const std::filesystem::path& path);
MeshFormat parse_format(const std::string& name);

/// Unvalidated vertex/tet arrays exactly as stored on disk (0-based).
struct RawMesh {
  Points vertices;
  std::vector<Tet> tets;
};

RawMesh load_raw_mesh(const std::filesystem::path& path, MeshFormat format);
RawMesh load_raw_mesh(const std::filesystem::path& path);

TetMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
TetMesh load_mesh(const std::filesystem::path& path);

/// Optional per-tet scalar written as VTK cell data (ignored by other formats).
struct CellScalars {
  std::string name;
  std::vector<double> values;
};

void save_mesh(const std::filesystem::path& path, const Points& vertices, const std::vector<Tet>& tets,
               MeshFormat format, const std::vector<CellScalars>& cell_data = {});
void save_mesh(const std::filesystem::path& path, const Points& vertices, const std::vector<Tet>& tets);

struct PopulationData {
  enum class Kind { tet_population, vertex_density };
  Kind kind = Kind::tet_population;
  std::vector<double> values;
};

/// Reads `tet_index,population` or `vertex_index,density` CSV files.
/// Every index in [0, count) must appear exactly once with a positive value,
/// where count is num_tets or num_vertices depending on the header.
PopulationData load_population_csv(const std::filesystem::path& path, int num_tets, int num_vertices);

void save_population_csv(const std::filesystem::path& path, const std::vector<double>& population);

}  // namespace volball
