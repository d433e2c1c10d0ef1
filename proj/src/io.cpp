#include "bidomain/io.hpp"

#include <cstdio>
#include <fstream>

namespace bidomain {

namespace {

std::string num(Real x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

}  // namespace

void write_vtk(std::ostream& os, const MeshTopology& mesh, const State& state, Real t,
               const std::string& title) {
  const Index n = mesh.num_nodes();
  os << "# vtk DataFile Version 3.0\n";
  os << title << " t=" << num(t) << " ms\n";
  os << "ASCII\n";
  os << "DATASET STRUCTURED_GRID\n";
  os << "DIMENSIONS " << mesh.nx + 1 << " " << mesh.ny + 1 << " " << mesh.nz + 1 << "\n";
  os << "POINTS " << n << " double\n";
  for (Index i = 0; i < n; ++i) {
    const Vec3& p = mesh.node_coords[i];
    os << num(p[0]) << " " << num(p[1]) << " " << num(p[2]) << "\n";
  }
  os << "POINT_DATA " << n << "\n";
  const Vec v = state.v();
  auto field = [&](const char* name, const Vec& f) {
    os << "SCALARS " << name << " double 1\n";
    os << "LOOKUP_TABLE default\n";
    for (Index i = 0; i < n; ++i) os << num(f[i]) << "\n";
  };
  field("v", v);
  field("u_e", state.ue);
  field("w", state.w);
}

void export_vtk(const std::string& path, const MeshTopology& mesh, const State& state,
                Real t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open vtk output file: " + path);
  write_vtk(os, mesh, state, t);
}

std::string format_sig(Real x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

void write_csv(std::ostream& os, const CsvTable& table) {
  for (size_t i = 0; i < table.header.size(); ++i)
    os << table.header[i] << (i + 1 < table.header.size() ? "," : "");
  os << "\n";
  for (const auto& row : table.rows) {
    for (size_t i = 0; i < row.size(); ++i)
      os << row[i] << (i + 1 < row.size() ? "," : "");
    os << "\n";
  }
}

void export_csv_file(const std::string& path, const CsvTable& table) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open csv output file: " + path);
  write_csv(os, table);
}

}  // namespace bidomain
