#pragma once

// File outputs: legacy ASCII VTK meshes with per-element data, indicator
// tables, and MatrixMarket dumps of assembled systems.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/SparseExtra>

#include "assembly.hpp"
#include "estimator.hpp"
#include "mesh.hpp"

namespace amipdg {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CellField {
  std::string name;
  std::vector<double> values;
};

/// Unstructured grid with tetrahedra (cell type 10) and optional scalar
/// CELL_DATA arrays, one value per tetrahedron.
inline void write_vtk(std::ostream& os, const TetMesh& mesh, const std::vector<CellField>& fields = {}) {
  const int nt = mesh.num_tets();
  for (const CellField& f : fields) {
    if (static_cast<int>(f.values.size()) != nt)
      throw std::invalid_argument("write_vtk: field '" + f.name + "' has wrong length");
    if (f.name.empty() || f.name.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("write_vtk: field names must be non-empty without whitespace");
  }
  const auto old_precision = os.precision(17);
  os << "# vtk DataFile Version 3.0\n"
     << "amipdg mesh\n"
     << "ASCII\n"
     << "DATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.num_vertices() << " double\n";
  for (const Point& p : mesh.vertices()) os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  os << "CELLS " << nt << ' ' << 5 * nt << '\n';
  for (const Tetrahedron& t : mesh.tets())
    os << 4 << ' ' << t.vertices[0] << ' ' << t.vertices[1] << ' ' << t.vertices[2] << ' ' << t.vertices[3]
       << '\n';
  os << "CELL_TYPES " << nt << '\n';
  for (int i = 0; i < nt; ++i) os << "10\n";
  if (!fields.empty()) {
    os << "CELL_DATA " << nt << '\n';
    for (const CellField& f : fields) {
      os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.values) os << v << '\n';
    }
  }
  os.precision(old_precision);
}

/// Mesh with eta^2 and its five components as cell data.
inline std::vector<CellField> indicator_fields(const IndicatorField& ind) {
  std::vector<CellField> out{{"eta2", ind.per_element}, {"r1", {}}, {"r2", {}}, {"r3", {}}, {"j1", {}}, {"j2", {}}};
  for (const IndicatorBreakdown& b : ind.breakdown) {
    out[1].values.push_back(b.r1);
    out[2].values.push_back(b.r2);
    out[3].values.push_back(b.r3);
    out[4].values.push_back(b.j1);
    out[5].values.push_back(b.j2);
  }
  return out;
}

inline void write_indicator_csv(std::ostream& os, const IndicatorField& ind) {
  const auto old_precision = os.precision(6);
  os << "element,eta2,r1,r2,r3,j1,j2\n";
  for (std::size_t e = 0; e < ind.per_element.size(); ++e) {
    const IndicatorBreakdown& b = ind.breakdown[e];
    os << e << ',' << ind.per_element[e] << ',' << b.r1 << ',' << b.r2 << ',' << b.r3 << ',' << b.j1 << ','
       << b.j2 << '\n';
  }
  os.precision(old_precision);
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw OutputError("cannot open " + path.string() + " for writing");
  return os;
}

inline void write_vtk_file(const std::filesystem::path& path, const TetMesh& mesh,
                           const std::vector<CellField>& fields = {}) {
  std::ofstream os = open_output(path);
  write_vtk(os, mesh, fields);
  if (!os) throw OutputError("failed writing " + path.string());
}

/// Matrix and right-hand side in MatrixMarket coordinate/array format:
/// `<stem>_matrix.mtx` and `<stem>_rhs.mtx`.
inline std::pair<std::filesystem::path, std::filesystem::path> dump_system(const SparseSystem& system,
                                                                           const std::filesystem::path& stem) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  std::filesystem::path matrix = stem;
  matrix += "_matrix.mtx";
  std::filesystem::path rhs = stem;
  rhs += "_rhs.mtx";
  if (!Eigen::saveMarket(system.matrix, matrix.string()))
    throw OutputError("cannot write " + matrix.string());
  if (!Eigen::saveMarketVector(system.rhs, rhs.string())) throw OutputError("cannot write " + rhs.string());
  return {matrix, rhs};
}

}  // namespace amipdg
