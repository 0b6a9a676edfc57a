#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regimenet/grid.hpp"

namespace regimenet {

/// Formats a double so that parsing the text recovers the exact bits.
std::string format_double(double v);

/// Flat CSV, one value per line, row-major, header line "# nx=<nx> ny=<ny>".
void write_cell_field_csv(const std::string& path, const CellField& field,
                          const StructuredGrid2D& grid);

struct CellFieldCsv {
    CellField field;
    int nx = 0;
    int ny = 0;
};

CellFieldCsv read_cell_field_csv(const std::string& path);

/// ASCII PGM (P2), nx x ny, 0 = GF, 255 = Darcy. Row ny-1 is written first
/// so the raster displays with the grid origin at the lower-left.
void write_labels_pgm(const std::string& path, const std::vector<std::uint8_t>& gf_labels,
                      const StructuredGrid2D& grid);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace regimenet
