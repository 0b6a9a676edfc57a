#include "regimenet/grid.hpp"

#include <algorithm>
#include <cmath>

namespace regimenet {

StructuredGrid2D::StructuredGrid2D(int nx_, int ny_, double dx_, double dy_,
                                   double origin_x_, double origin_y_)
    : nx(nx_), ny(ny_), dx(dx_), dy(dy_), origin_x(origin_x_), origin_y(origin_y_) {
    if (nx < 1 || ny < 1) throw DomainError("grid: cell counts must be >= 1");
    if (!(dx > 0.0) || !(dy > 0.0)) throw DomainError("grid: cell sizes must be > 0");
}

int cell_index(int i, int j, const StructuredGrid2D& grid) {
    if (i < 0 || i >= grid.nx || j < 0 || j >= grid.ny)
        throw IndexError("cell_index: (" + std::to_string(i) + "," + std::to_string(j) +
                         ") outside " + std::to_string(grid.nx) + "x" + std::to_string(grid.ny));
    return j * grid.nx + i;
}

double CellField::min() const {
    return *std::min_element(values.begin(), values.end());
}

double CellField::max() const {
    return *std::max_element(values.begin(), values.end());
}

namespace {

inline void magnitude_row(const FaceField& faces, const StructuredGrid2D& grid, int j,
                          CellField& out) {
    const int nx = grid.nx;
    for (int i = 0; i < nx; ++i) {
        const double ux = 0.5 * (faces.xflux[grid.x_face_index(i, j)] +
                                 faces.xflux[grid.x_face_index(i + 1, j)]);
        const double uy = 0.5 * (faces.yflux[grid.y_face_index(i, j)] +
                                 faces.yflux[grid.y_face_index(i, j + 1)]);
        out[static_cast<std::size_t>(j * nx + i)] = std::hypot(ux, uy);
    }
}

} // namespace

CellField cell_flux_magnitude(const FaceField& faces, const StructuredGrid2D& grid) {
    if (!faces.matches(grid))
        throw ShapeError("cell_flux_magnitude: face field does not match grid");
    CellField out(static_cast<std::size_t>(grid.cell_count()));
#pragma omp parallel for schedule(static)
    for (int j = 0; j < grid.ny; ++j) magnitude_row(faces, grid, j, out);
    return out;
}

CellField cell_flux_magnitude_serial(const FaceField& faces, const StructuredGrid2D& grid) {
    if (!faces.matches(grid))
        throw ShapeError("cell_flux_magnitude: face field does not match grid");
    CellField out(static_cast<std::size_t>(grid.cell_count()));
    for (int j = 0; j < grid.ny; ++j) magnitude_row(faces, grid, j, out);
    return out;
}

} // namespace regimenet
