#include "regimenet/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace regimenet {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_cell_field_csv(const std::string& path, const CellField& field,
                          const StructuredGrid2D& grid) {
    if (field.size() != static_cast<std::size_t>(grid.cell_count()))
        throw ShapeError("write_cell_field_csv: field size does not match grid");
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << "# nx=" << grid.nx << " ny=" << grid.ny << "\n";
    for (double v : field.values) out << format_double(v) << "\n";
    if (!out) throw FormatError("write failed: " + path);
}

CellFieldCsv read_cell_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open: " + path);
    std::string header;
    std::getline(in, header);
    CellFieldCsv result;
    if (std::sscanf(header.c_str(), "# nx=%d ny=%d", &result.nx, &result.ny) != 2)
        throw FormatError(path + ": missing '# nx=<nx> ny=<ny>' header");
    if (result.nx < 1 || result.ny < 1) throw FormatError(path + ": bad grid dims in header");
    const std::size_t expected = static_cast<std::size_t>(result.nx) * result.ny;
    result.field.values.reserve(expected);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            result.field.values.push_back(std::stod(line));
        } catch (const std::exception&) {
            throw FormatError(path + ": unparsable value '" + line + "'");
        }
    }
    if (result.field.size() != expected)
        throw FormatError(path + ": expected " + std::to_string(expected) + " values, got " +
                          std::to_string(result.field.size()));
    return result;
}

void write_labels_pgm(const std::string& path, const std::vector<std::uint8_t>& gf_labels,
                      const StructuredGrid2D& grid) {
    if (gf_labels.size() != static_cast<std::size_t>(grid.cell_count()))
        throw ShapeError("write_labels_pgm: label count does not match grid");
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << "P2\n" << grid.nx << " " << grid.ny << "\n255\n";
    for (int j = grid.ny - 1; j >= 0; --j) {
        for (int i = 0; i < grid.nx; ++i) {
            out << (gf_labels[static_cast<std::size_t>(j * grid.nx + i)] ? 0 : 255);
            out << (i + 1 == grid.nx ? '\n' : ' ');
        }
    }
    if (!out) throw FormatError("write failed: " + path);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << content;
    if (!out) throw FormatError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace regimenet
