#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regimenet/constitutive.hpp"
#include "regimenet/grid.hpp"
#include "regimenet/solver.hpp"

namespace regimenet {

/// A ready-to-solve case: mesh, medium, boundary data and sources.
struct Scenario {
    StructuredGrid2D grid;
    MediumFields medium;
    FluidProperties fluid;
    BoundarySpec bcs;
    CellField q; // mass source per unit volume, kg m^-3 s^-1
    BodyForce f;
};

/// Axis-aligned or segment-defined strip in cell coordinates; cells are
/// stamped in width x width blocks anchored at the segment samples.
struct ChannelStrip {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    int width = 1;
};

struct ChannelGeometry {
    std::vector<ChannelStrip> strips;

    /// Cell lists per strip (row-major linear indices, within bounds,
    /// deduplicated); overlapping cells appear in every strip that covers
    /// them.
    std::vector<std::vector<int>> rasterize(const StructuredGrid2D& grid) const;
};

/// The default layouts: two full-height vertical strips at x ~ 1/3 and 2/3,
/// or a network of four verticals (x ~ 0.2, 0.4, 0.6, 0.8) tied together by
/// three horizontal connectors (y ~ 0.25, 0.5, 0.75). Shipped for the 50x50
/// grid under data/, regenerated here for any grid size.
ChannelGeometry default_channel_geometry(int n_channels, const StructuredGrid2D& grid);

/// One line per strip: "x0 y0 x1 y1 width" in cell coordinates.
ChannelGeometry parse_channel_geometry(const std::string& text);
std::string format_channel_geometry(const ChannelGeometry& geometry);

struct LandfillConfig {
    int n_channels = 2;
    std::vector<double> channel_porosities; // one per channel
    double u0 = 0.0105;                     // top influx, kg m^-2 s^-1
    double background_phi = 0.35;
    int nx = 50;
    int ny = 50;
    double domain_width = 1.0;  // m
    double domain_height = 1.0; // m
    FluidProperties fluid = FluidProperties::water();
    double cF = 0.55;
    double m = 1.0;
    double delta = 0.1;
    // Optional override of the built-in channel layout.
    std::string geometry_path;
};

/// Rainwater infiltration into channeled soil: uniform influx across the
/// top, no-flow sides, hydrostatic pressure along the bottom, gravity body
/// force. Permeability follows Kozeny-Carman from the porosity field.
Scenario build_landfill(const LandfillConfig& cfg);

struct Spe10Config {
    double Q = 100.0; // injection mass rate, kg s^-1
    std::string permeability_path; // empty: use the synthetic field
    bool synthetic = true;
    std::uint64_t synthetic_seed = 1;
    double synthetic_log_mean = -18.0; // ln of m^2
    double synthetic_log_std = 1.5;
    int nx = 60;
    int ny = 220;
    double domain_width = 365.76;  // 60 x 20 ft
    double domain_height = 670.56; // 220 x 10 ft
    double layer_depth = 21.336;   // m, sets the hydrostatic boundary pressure
    double porosity = 0.2;
    FluidProperties fluid = FluidProperties::water();
    double cF = 0.55;
    double m = 1.0;
    double delta = 0.1;
};

/// Horizontal reservoir layer: one injection well at the center cell, four
/// production wells of Q/4 at the corner cells, hydrostatic Dirichlet
/// pressure rho*g*depth on the whole boundary, no body force.
Scenario build_spe10(const Spe10Config& cfg);

/// Reads whitespace-separated positive permeabilities in m^2, row-major.
/// Throws FormatError on a wrong count and DataError on nonpositive values.
CellField load_spe10_permeability(const std::string& path, std::size_t expected_count = 13200);

/// Per-cell lognormal field smoothed by one pass of 3x3 box averaging in log
/// space. Deterministic for a fixed seed.
CellField synthetic_permeability(const StructuredGrid2D& grid, std::uint64_t seed,
                                 double log_mean, double log_std);

/// Hydrostatic profile p(y) = rho * g * (height_ref - y).
double hydrostatic_pressure(double rho, double height_ref, double y);

} // namespace regimenet
