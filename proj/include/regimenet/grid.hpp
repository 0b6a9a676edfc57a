#pragma once

#include <string>
#include <vector>

#include "regimenet/errors.hpp"

namespace regimenet {

/// Uniform rectangular 2D mesh. Cells are indexed row-major with the origin
/// cell at the lower-left corner, so linear index = j*nx + i for column i,
/// row j. Immutable after construction.
struct StructuredGrid2D {
    int nx = 1;
    int ny = 1;
    double dx = 1.0;
    double dy = 1.0;
    double origin_x = 0.0;
    double origin_y = 0.0;

    StructuredGrid2D() = default;
    StructuredGrid2D(int nx_, int ny_, double dx_, double dy_,
                     double origin_x_ = 0.0, double origin_y_ = 0.0);

    int cell_count() const { return nx * ny; }
    int x_face_count() const { return (nx + 1) * ny; }
    int y_face_count() const { return nx * (ny + 1); }

    // Unit depth in the out-of-plane direction.
    double cell_volume() const { return dx * dy; }
    double x_face_area() const { return dy; }
    double y_face_area() const { return dx; }
    double width() const { return nx * dx; }
    double height() const { return ny * dy; }

    // x-normal face (i,j) with i in [0,nx], j in [0,ny); face i sits between
    // cell columns i-1 and i of row j.
    int x_face_index(int i, int j) const { return j * (nx + 1) + i; }
    // y-normal face (i,j) with i in [0,nx), j in [0,ny].
    int y_face_index(int i, int j) const { return j * nx + i; }

    double cell_center_x(int i) const { return origin_x + (i + 0.5) * dx; }
    double cell_center_y(int j) const { return origin_y + (j + 0.5) * dy; }
};

/// Row-major linear index of cell (i,j); throws IndexError out of range.
int cell_index(int i, int j, const StructuredGrid2D& grid);

/// One scalar per cell, row-major. The physical unit is carried by context.
struct CellField {
    std::vector<double> values;

    CellField() = default;
    explicit CellField(std::size_t n, double fill = 0.0) : values(n, fill) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    double min() const;
    double max() const;
};

/// One scalar per face, split by face orientation. For fluxes the stored
/// value is the flux component along the +x (resp. +y) axis in
/// kg m^-2 s^-1.
struct FaceField {
    std::vector<double> xflux;
    std::vector<double> yflux;

    FaceField() = default;
    explicit FaceField(const StructuredGrid2D& grid, double fill = 0.0)
        : xflux(static_cast<std::size_t>(grid.x_face_count()), fill),
          yflux(static_cast<std::size_t>(grid.y_face_count()), fill) {}

    bool matches(const StructuredGrid2D& grid) const {
        return xflux.size() == static_cast<std::size_t>(grid.x_face_count()) &&
               yflux.size() == static_cast<std::size_t>(grid.y_face_count());
    }
};

/// Euclidean flux magnitude per cell: each velocity component is the
/// arithmetic mean of the two bounding face values of that orientation.
CellField cell_flux_magnitude(const FaceField& faces, const StructuredGrid2D& grid);

/// Serial reference for cell_flux_magnitude, kept for kernel testing.
CellField cell_flux_magnitude_serial(const FaceField& faces, const StructuredGrid2D& grid);

} // namespace regimenet
