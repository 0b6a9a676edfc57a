#include "regimenet/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "regimenet/io.hpp"
#include "regimenet/rng.hpp"

namespace regimenet {

std::vector<std::vector<int>> ChannelGeometry::rasterize(const StructuredGrid2D& grid) const {
    std::vector<std::vector<int>> cells;
    cells.reserve(strips.size());
    for (const ChannelStrip& s : strips) {
        std::set<int> marked;
        const double len = std::hypot(s.x1 - s.x0, s.y1 - s.y0);
        const int steps = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
        for (int step = 0; step <= steps; ++step) {
            const double t = static_cast<double>(step) / steps;
            const int bx = static_cast<int>(std::lround(s.x0 + t * (s.x1 - s.x0)));
            const int by = static_cast<int>(std::lround(s.y0 + t * (s.y1 - s.y0)));
            for (int dj = 0; dj < s.width; ++dj)
                for (int di = 0; di < s.width; ++di) {
                    const int i = bx + di, j = by + dj;
                    if (i >= 0 && i < grid.nx && j >= 0 && j < grid.ny)
                        marked.insert(j * grid.nx + i);
                }
        }
        cells.emplace_back(marked.begin(), marked.end());
    }
    return cells;
}

ChannelGeometry default_channel_geometry(int n_channels, const StructuredGrid2D& grid) {
    const auto column_at = [&](double frac) {
        return std::max(0.0, std::min<double>(grid.nx - 2, std::round(frac * grid.nx) - 1));
    };
    const auto row_at = [&](double frac) {
        return std::max(0.0, std::min<double>(grid.ny - 2, std::round(frac * grid.ny) - 1));
    };
    ChannelGeometry geo;
    if (n_channels == 2) {
        for (double frac : {1.0 / 3.0, 2.0 / 3.0}) {
            const double c = column_at(frac);
            geo.strips.push_back({c, 0.0, c, static_cast<double>(grid.ny - 1), 2});
        }
    } else if (n_channels == 7) {
        for (double frac : {0.2, 0.4, 0.6, 0.8}) {
            const double c = column_at(frac);
            geo.strips.push_back({c, 0.0, c, static_cast<double>(grid.ny - 1), 2});
        }
        const double x_first = column_at(0.2), x_last = column_at(0.8);
        for (double frac : {0.25, 0.5, 0.75}) {
            const double r = row_at(frac);
            geo.strips.push_back({x_first, r, x_last, r, 2});
        }
    } else {
        throw ConfigError("default_channel_geometry: channel count must be 2 or 7");
    }
    return geo;
}

ChannelGeometry parse_channel_geometry(const std::string& text) {
    ChannelGeometry geo;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        ChannelStrip s;
        if (!(ls >> s.x0 >> s.y0 >> s.x1 >> s.y1 >> s.width))
            throw FormatError("channel geometry: expected 'x0 y0 x1 y1 width', got '" + line +
                              "'");
        if (s.width < 1) throw FormatError("channel geometry: width must be >= 1");
        geo.strips.push_back(s);
    }
    if (geo.strips.empty()) throw FormatError("channel geometry: no strips found");
    return geo;
}

std::string format_channel_geometry(const ChannelGeometry& geometry) {
    std::ostringstream out;
    out << "# channel strips: x0 y0 x1 y1 width (cell coordinates)\n";
    for (const ChannelStrip& s : geometry.strips)
        out << format_double(s.x0) << " " << format_double(s.y0) << " " << format_double(s.x1)
            << " " << format_double(s.y1) << " " << s.width << "\n";
    return out.str();
}

double hydrostatic_pressure(double rho, double height_ref, double y) {
    return rho * kGravity * (height_ref - y);
}

Scenario build_landfill(const LandfillConfig& cfg) {
    if (cfg.n_channels != 2 && cfg.n_channels != 7)
        throw ConfigError("build_landfill: channel count must be 2 or 7");
    if (cfg.channel_porosities.size() != static_cast<std::size_t>(cfg.n_channels))
        throw ConfigError("build_landfill: expected " + std::to_string(cfg.n_channels) +
                          " channel porosities, got " +
                          std::to_string(cfg.channel_porosities.size()));
    for (double phi : cfg.channel_porosities)
        if (!(phi > 0.0) || !(phi < 1.0))
            throw ConfigError("build_landfill: channel porosity must lie in (0,1)");
    if (!(cfg.background_phi > 0.0) || !(cfg.background_phi < 1.0))
        throw ConfigError("build_landfill: background porosity must lie in (0,1)");
    cfg.fluid.validate();

    Scenario sc;
    sc.grid = StructuredGrid2D(cfg.nx, cfg.ny, cfg.domain_width / cfg.nx,
                               cfg.domain_height / cfg.ny);
    const std::size_t n = static_cast<std::size_t>(sc.grid.cell_count());

    const ChannelGeometry geo =
        cfg.geometry_path.empty()
            ? default_channel_geometry(cfg.n_channels, sc.grid)
            : parse_channel_geometry(read_text_file(cfg.geometry_path));
    if (geo.strips.size() != static_cast<std::size_t>(cfg.n_channels))
        throw ConfigError("build_landfill: geometry has " + std::to_string(geo.strips.size()) +
                          " strips for " + std::to_string(cfg.n_channels) + " channels");

    sc.medium.phi = CellField(n, cfg.background_phi);
    const auto strip_cells = geo.rasterize(sc.grid);
    for (std::size_t s = 0; s < strip_cells.size(); ++s)
        for (int c : strip_cells[s])
            sc.medium.phi[static_cast<std::size_t>(c)] = cfg.channel_porosities[s];

    sc.medium.k = CellField(n);
    for (std::size_t c = 0; c < n; ++c) sc.medium.k[c] = kozeny_carman(sc.medium.phi[c]);
    sc.medium.cF = CellField(n, cfg.cF);
    sc.medium.m = cfg.m;
    sc.medium.delta = cfg.delta;
    sc.medium.validate();

    sc.fluid = cfg.fluid;
    const double rho = cfg.fluid.rho;
    const double height = cfg.domain_height;
    sc.bcs.top = BoundaryCondition::neumann(-cfg.u0); // inflow
    sc.bcs.left = BoundaryCondition::no_flux();
    sc.bcs.right = BoundaryCondition::no_flux();
    sc.bcs.bottom = BoundaryCondition::pressure(
        [rho, height](double, double y) { return hydrostatic_pressure(rho, height, y); });
    sc.q = CellField(n, 0.0);
    sc.f = BodyForce{0.0, -rho * kGravity};
    return sc;
}

CellField load_spe10_permeability(const std::string& path, std::size_t expected_count) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open permeability file: " + path);
    CellField k;
    k.values.reserve(expected_count);
    double v;
    while (in >> v) k.values.push_back(v);
    if (!in.eof()) throw FormatError(path + ": unparsable permeability data");
    if (k.size() != expected_count)
        throw FormatError(path + ": expected " + std::to_string(expected_count) +
                          " values, got " + std::to_string(k.size()));
    for (double val : k.values)
        if (!(val > 0.0)) throw DataError(path + ": nonpositive permeability value");
    return k;
}

CellField synthetic_permeability(const StructuredGrid2D& grid, std::uint64_t seed,
                                 double log_mean, double log_std) {
    if (log_std < 0.0) throw DomainError("synthetic_permeability: log_std must be >= 0");
    const std::size_t n = static_cast<std::size_t>(grid.cell_count());
    Rng rng(seed);
    std::vector<double> logk(n);
    for (std::size_t c = 0; c < n; ++c) logk[c] = rng.normal(log_mean, log_std);

    // One 3x3 box-average pass in log space induces short-range correlation.
    CellField k(n);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            double sum = 0.0;
            int count = 0;
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= grid.nx || jj < 0 || jj >= grid.ny) continue;
                    sum += logk[static_cast<std::size_t>(jj * grid.nx + ii)];
                    ++count;
                }
            k[static_cast<std::size_t>(j * grid.nx + i)] = std::exp(sum / count);
        }
    return k;
}

Scenario build_spe10(const Spe10Config& cfg) {
    if (!(cfg.Q > 0.0)) throw ConfigError("build_spe10: well rate must be positive");
    cfg.fluid.validate();

    Scenario sc;
    sc.grid = StructuredGrid2D(cfg.nx, cfg.ny, cfg.domain_width / cfg.nx,
                               cfg.domain_height / cfg.ny);
    const std::size_t n = static_cast<std::size_t>(sc.grid.cell_count());

    if (!cfg.permeability_path.empty())
        sc.medium.k = load_spe10_permeability(cfg.permeability_path, n);
    else if (cfg.synthetic)
        sc.medium.k = synthetic_permeability(sc.grid, cfg.synthetic_seed,
                                             cfg.synthetic_log_mean, cfg.synthetic_log_std);
    else
        throw ConfigError("build_spe10: no permeability file and synthetic field disabled");

    sc.medium.phi = CellField(n, cfg.porosity);
    sc.medium.cF = CellField(n, cfg.cF);
    sc.medium.m = cfg.m;
    sc.medium.delta = cfg.delta;
    sc.medium.validate();

    sc.fluid = cfg.fluid;
    // Horizontal layer at the given depth: hydrostatic pressure is uniform
    // along the boundary and there is no in-plane body force.
    const double p0 = cfg.fluid.rho * kGravity * cfg.layer_depth;
    sc.bcs.left = BoundaryCondition::pressure(p0);
    sc.bcs.right = BoundaryCondition::pressure(p0);
    sc.bcs.bottom = BoundaryCondition::pressure(p0);
    sc.bcs.top = BoundaryCondition::pressure(p0);
    sc.f = BodyForce{0.0, 0.0};

    sc.q = CellField(n, 0.0);
    const double vol = sc.grid.cell_volume();
    const int ci = cfg.nx / 2, cj = cfg.ny / 2;
    sc.q[static_cast<std::size_t>(cj * cfg.nx + ci)] = cfg.Q / vol;
    const double out = -(cfg.Q / 4.0) / vol;
    sc.q[0] += out;
    sc.q[static_cast<std::size_t>(cfg.nx - 1)] += out;
    sc.q[static_cast<std::size_t>((cfg.ny - 1) * cfg.nx)] += out;
    sc.q[static_cast<std::size_t>(cfg.ny * cfg.nx - 1)] += out;
    return sc;
}

} // namespace regimenet
