#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "bidomain/geometry.hpp"
#include "bidomain/state.hpp"

namespace bidomain {

/// Legacy ASCII structured-grid file with point fields v, u_e, w.
/// Output is byte-stable for identical inputs.
void write_vtk(std::ostream& os, const MeshTopology& mesh, const State& state,
               Real t, const std::string& title = "bidomain snapshot");
void export_vtk(const std::string& path, const MeshTopology& mesh, const State& state,
                Real t);

/// Fixed-width-free CSV: numeric cells are printed with 6 significant
/// digits, integers verbatim.
std::string format_sig(Real x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(std::ostream& os, const CsvTable& table);
void export_csv_file(const std::string& path, const CsvTable& table);

}  // namespace bidomain
