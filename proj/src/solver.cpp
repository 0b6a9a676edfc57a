#include "regimenet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace regimenet {

namespace {

double face_psi(const BoundaryCondition& bc, double x, double y, const BodyForce& f) {
    return bc.dirichlet(x, y) - (f.fx * x + f.fy * y);
}

} // namespace

void LinearSystem::apply(const std::vector<double>& x, std::vector<double>& y) const {
    const int nx = grid.nx, ny = grid.ny;
    // forking threads only pays off once the stencil work dominates the
    // parallel-region overhead
#pragma omp parallel for schedule(static) if (nx * ny >= 65536)
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t c = static_cast<std::size_t>(j * nx + i);
            double acc = diag[c] * x[c];
            if (i > 0) acc -= tx[grid.x_face_index(i, j)] * x[c - 1];
            if (i < nx - 1) acc -= tx[grid.x_face_index(i + 1, j)] * x[c + 1];
            if (j > 0) acc -= ty[grid.y_face_index(i, j)] * x[c - nx];
            if (j < ny - 1) acc -= ty[grid.y_face_index(i, j + 1)] * x[c + nx];
            y[c] = acc;
        }
    }
}

void LinearSystem::apply_serial(const std::vector<double>& x, std::vector<double>& y) const {
    const int nx = grid.nx, ny = grid.ny;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t c = static_cast<std::size_t>(j * nx + i);
            double acc = diag[c] * x[c];
            if (i > 0) acc -= tx[grid.x_face_index(i, j)] * x[c - 1];
            if (i < nx - 1) acc -= tx[grid.x_face_index(i + 1, j)] * x[c + 1];
            if (j > 0) acc -= ty[grid.y_face_index(i, j)] * x[c - nx];
            if (j < ny - 1) acc -= ty[grid.y_face_index(i, j + 1)] * x[c + nx];
            y[c] = acc;
        }
    }
}

void LinearSystem::apply_abs(const std::vector<double>& x, std::vector<double>& y) const {
    const int nx = grid.nx, ny = grid.ny;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t c = static_cast<std::size_t>(j * nx + i);
            double acc = diag[c] * std::abs(x[c]);
            if (i > 0) acc += tx[grid.x_face_index(i, j)] * std::abs(x[c - 1]);
            if (i < nx - 1) acc += tx[grid.x_face_index(i + 1, j)] * std::abs(x[c + 1]);
            if (j > 0) acc += ty[grid.y_face_index(i, j)] * std::abs(x[c - nx]);
            if (j < ny - 1) acc += ty[grid.y_face_index(i, j + 1)] * std::abs(x[c + nx]);
            y[c] = acc;
        }
    }
}

CellField LinearSystem::recover_pressure(const std::vector<double>& psi) const {
    CellField p(psi.size());
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const std::size_t c = static_cast<std::size_t>(j * grid.nx + i);
            p[c] = psi[c] + shift +
                   body_force.fx * grid.cell_center_x(i) + body_force.fy * grid.cell_center_y(j);
        }
    return p;
}

LinearSystem assemble_linear_system(const StructuredGrid2D& grid,
                                    const CellField& inverse_mobility, const BoundarySpec& bcs,
                                    const CellField& q, const BodyForce& f) {
    const std::size_t n = static_cast<std::size_t>(grid.cell_count());
    if (inverse_mobility.size() != n || q.size() != n)
        throw ShapeError("assemble_linear_system: field sizes do not match grid");
    for (std::size_t c = 0; c < n; ++c)
        if (!(inverse_mobility[c] > 0.0) || !std::isfinite(inverse_mobility[c]))
            throw AssemblyError("assemble_linear_system: nonpositive inverse mobility");
    for (const auto* bc : {&bcs.left, &bcs.right, &bcs.bottom, &bcs.top})
        if (bc->kind == BoundaryCondition::Kind::Dirichlet && !bc->dirichlet)
            throw BoundarySpecError("Dirichlet side without a pressure function");

    LinearSystem sys;
    sys.grid = grid;
    sys.body_force = f;
    sys.diag.assign(n, 0.0);
    sys.rhs.assign(n, 0.0);
    sys.tx.assign(static_cast<std::size_t>(grid.x_face_count()), 0.0);
    sys.ty.assign(static_cast<std::size_t>(grid.y_face_count()), 0.0);
    sys.cx.assign(sys.tx.size(), 0.0);
    sys.cy.assign(sys.ty.size(), 0.0);
    sys.dirichlet_psi_x.assign(sys.tx.size(), 0.0);
    sys.dirichlet_psi_y.assign(sys.ty.size(), 0.0);
    sys.neumann_x.assign(sys.tx.size(), 0.0);
    sys.neumann_y.assign(sys.ty.size(), 0.0);
    sys.is_dirichlet_x.assign(sys.tx.size(), 0);
    sys.is_dirichlet_y.assign(sys.ty.size(), 0);

    const int nx = grid.nx, ny = grid.ny;
    const auto lam = [&](int i, int j) { return inverse_mobility[j * nx + i]; };

    // Mean Dirichlet potential; subtracting it keeps the solve at the scale
    // of the pressure variations rather than the absolute pressure level.
    double psi_sum = 0.0;
    std::size_t psi_count = 0;
    const double x_lo = grid.origin_x, x_hi = grid.origin_x + grid.width();
    const double y_lo = grid.origin_y, y_hi = grid.origin_y + grid.height();
    if (bcs.left.kind == BoundaryCondition::Kind::Dirichlet)
        for (int j = 0; j < ny; ++j) {
            psi_sum += face_psi(bcs.left, x_lo, grid.cell_center_y(j), f);
            ++psi_count;
        }
    if (bcs.right.kind == BoundaryCondition::Kind::Dirichlet)
        for (int j = 0; j < ny; ++j) {
            psi_sum += face_psi(bcs.right, x_hi, grid.cell_center_y(j), f);
            ++psi_count;
        }
    if (bcs.bottom.kind == BoundaryCondition::Kind::Dirichlet)
        for (int i = 0; i < nx; ++i) {
            psi_sum += face_psi(bcs.bottom, grid.cell_center_x(i), y_lo, f);
            ++psi_count;
        }
    if (bcs.top.kind == BoundaryCondition::Kind::Dirichlet)
        for (int i = 0; i < nx; ++i) {
            psi_sum += face_psi(bcs.top, grid.cell_center_x(i), y_hi, f);
            ++psi_count;
        }
    sys.singular = psi_count == 0;
    sys.shift = psi_count ? psi_sum / static_cast<double>(psi_count) : 0.0;

    // Sources.
    const double vol = grid.cell_volume();
    for (std::size_t c = 0; c < n; ++c) sys.rhs[c] = q[c] * vol;

    // Interior faces: harmonic mean of the mobilities 1/Lambda.
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            const double c_face = 2.0 / (grid.dx * (lam(i - 1, j) + lam(i, j)));
            const double coupling = c_face * grid.x_face_area();
            const std::size_t fidx = static_cast<std::size_t>(grid.x_face_index(i, j));
            sys.cx[fidx] = c_face;
            sys.tx[fidx] = coupling;
            sys.diag[j * nx + i - 1] += coupling;
            sys.diag[j * nx + i] += coupling;
        }
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double c_face = 2.0 / (grid.dy * (lam(i, j - 1) + lam(i, j)));
            const double coupling = c_face * grid.y_face_area();
            const std::size_t fidx = static_cast<std::size_t>(grid.y_face_index(i, j));
            sys.cy[fidx] = c_face;
            sys.ty[fidx] = coupling;
            sys.diag[(j - 1) * nx + i] += coupling;
            sys.diag[j * nx + i] += coupling;
        }

    // Boundary faces.
    const auto add_boundary_x = [&](int fi, int j, int ci, const BoundaryCondition& bc,
                                    double face_x) {
        const std::size_t fidx = static_cast<std::size_t>(grid.x_face_index(fi, j));
        const std::size_t c = static_cast<std::size_t>(j * nx + ci);
        if (bc.kind == BoundaryCondition::Kind::Dirichlet) {
            const double c_half = 2.0 / (grid.dx * lam(ci, j));
            const double coupling = c_half * grid.x_face_area();
            const double psi0 = face_psi(bc, face_x, grid.cell_center_y(j), f) - sys.shift;
            sys.cx[fidx] = c_half;
            sys.dirichlet_psi_x[fidx] = psi0;
            sys.is_dirichlet_x[fidx] = 1;
            sys.diag[c] += coupling;
            sys.rhs[c] += coupling * psi0;
        } else {
            sys.neumann_x[fidx] = bc.neumann_flux;
            sys.rhs[c] -= bc.neumann_flux * grid.x_face_area();
        }
    };
    const auto add_boundary_y = [&](int i, int fj, int cj, const BoundaryCondition& bc,
                                    double face_y) {
        const std::size_t fidx = static_cast<std::size_t>(grid.y_face_index(i, fj));
        const std::size_t c = static_cast<std::size_t>(cj * nx + i);
        if (bc.kind == BoundaryCondition::Kind::Dirichlet) {
            const double c_half = 2.0 / (grid.dy * lam(i, cj));
            const double coupling = c_half * grid.y_face_area();
            const double psi0 = face_psi(bc, grid.cell_center_x(i), face_y, f) - sys.shift;
            sys.cy[fidx] = c_half;
            sys.dirichlet_psi_y[fidx] = psi0;
            sys.is_dirichlet_y[fidx] = 1;
            sys.diag[c] += coupling;
            sys.rhs[c] += coupling * psi0;
        } else {
            sys.neumann_y[fidx] = bc.neumann_flux;
            sys.rhs[c] -= bc.neumann_flux * grid.y_face_area();
        }
    };
    for (int j = 0; j < ny; ++j) {
        add_boundary_x(0, j, 0, bcs.left, x_lo);
        add_boundary_x(nx, j, nx - 1, bcs.right, x_hi);
    }
    for (int i = 0; i < nx; ++i) {
        add_boundary_y(i, 0, 0, bcs.bottom, y_lo);
        add_boundary_y(i, ny, ny - 1, bcs.top, y_hi);
    }

    if (sys.singular) {
        // Pure-Neumann problem: the data must balance the sources.
        double imbalance = 0.0, scale = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            imbalance += sys.rhs[c];
            scale += std::abs(sys.rhs[c]);
        }
        if (std::abs(imbalance) > 1e-10 * std::max(scale, 1e-300))
            throw BoundarySpecError(
                "all-Neumann boundary data incompatible with the sources");
        const double mean = imbalance / static_cast<double>(n);
        for (std::size_t c = 0; c < n; ++c) sys.rhs[c] -= mean;
    }
    return sys;
}

namespace {

// Incomplete Cholesky on the 5-point pattern (no fill). High permeability
// contrast makes plain Jacobi preconditioning stall, while IC(0) keeps the
// iteration count bounded. A diagonal shift retries keep the factorization
// positive when the dropped fill would make a pivot fail.
struct IncompleteCholesky {
    int nx = 0, ny = 0;
    std::vector<double> ld;     // diagonal of L
    std::vector<double> lwest;  // L entry to cell-1
    std::vector<double> lsouth; // L entry to cell-nx
    bool ok = false;

    void factor(const LinearSystem& sys) {
        nx = sys.grid.nx;
        ny = sys.grid.ny;
        const std::size_t n = sys.size();
        ld.assign(n, 0.0);
        lwest.assign(n, 0.0);
        lsouth.assign(n, 0.0);
        double shift = 0.0;
        for (int attempt = 0; attempt < 8; ++attempt) {
            bool failed = false;
            for (int j = 0; j < ny && !failed; ++j) {
                for (int i = 0; i < nx; ++i) {
                    const std::size_t c = static_cast<std::size_t>(j * nx + i);
                    double lw = 0.0, ls = 0.0;
                    if (i > 0) lw = -sys.tx[sys.grid.x_face_index(i, j)] / ld[c - 1];
                    if (j > 0)
                        ls = -sys.ty[sys.grid.y_face_index(i, j)] /
                             ld[c - static_cast<std::size_t>(nx)];
                    const double d = sys.diag[c] * (1.0 + shift) - lw * lw - ls * ls;
                    if (!(d > 0.0)) {
                        failed = true;
                        break;
                    }
                    lwest[c] = lw;
                    lsouth[c] = ls;
                    ld[c] = std::sqrt(d);
                }
            }
            if (!failed) {
                ok = true;
                return;
            }
            shift = shift == 0.0 ? 1e-8 : shift * 100.0;
        }
        ok = false;
    }

    // z = (L L^T)^{-1} r
    void apply(const std::vector<double>& r, std::vector<double>& z) const {
        const std::size_t n = r.size();
        for (std::size_t c = 0; c < n; ++c) {
            double v = r[c];
            const int i = static_cast<int>(c) % nx;
            if (i > 0) v -= lwest[c] * z[c - 1];
            if (c >= static_cast<std::size_t>(nx)) v -= lsouth[c] * z[c - nx];
            z[c] = v / ld[c];
        }
        for (std::size_t c = n; c-- > 0;) {
            double v = z[c];
            const int i = static_cast<int>(c) % nx;
            if (i < nx - 1) v -= lwest[c + 1] * z[c + 1];
            if (c + static_cast<std::size_t>(nx) < n) v -= lsouth[c + nx] * z[c + nx];
            z[c] = v / ld[c];
        }
    }
};

} // namespace

std::vector<double> solve_linear(const LinearSystem& sys, const LinearSolveOptions& opts) {
    const std::size_t n = sys.size();
    std::vector<double> x(n, 0.0);
    if (opts.initial_guess) {
        if (opts.initial_guess->size() != n)
            throw ShapeError("solve_linear: initial guess size mismatch");
        x = *opts.initial_guess;
    }
    const auto project = [&](std::vector<double>& v) {
        if (!sys.singular) return;
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
        for (double& vi : v) vi -= mean;
    };
    project(x);

    const double bnorm = std::sqrt(
        std::inner_product(sys.rhs.begin(), sys.rhs.end(), sys.rhs.begin(), 0.0));
    if (bnorm == 0.0) return std::vector<double>(n, 0.0);

    std::vector<double> r(n), z(n), p(n), Ap(n);
    sys.apply(x, Ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = sys.rhs[i] - Ap[i];

    IncompleteCholesky ic;
    if (!sys.singular) ic.factor(sys);
    const auto precondition = [&]() {
        if (ic.ok)
            ic.apply(r, z);
        else
            for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / sys.diag[i];
        project(z);
    };
    const int max_iter =
        opts.max_iterations > 0 ? opts.max_iterations
                                : std::max(5000, 4 * static_cast<int>(n));
    const double target = opts.rtol * bnorm;
    double rnorm = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
    double best = rnorm;
    int since_best = 0;

    precondition();
    p = z;
    double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);

    for (int it = 0; it < max_iter && rnorm > target; ++it) {
        sys.apply(p, Ap);
        const double pAp = std::inner_product(p.begin(), p.end(), Ap.begin(), 0.0);
        if (!(pAp > 0.0)) break; // numerically semi-definite; stop with best x
        const double alpha = rz / pAp;
        for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
        if ((it + 1) % 50 == 0) {
            sys.apply(x, Ap);
            for (std::size_t i = 0; i < n; ++i) r[i] = sys.rhs[i] - Ap[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * Ap[i];
        }
        rnorm = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
        if (rnorm <= target) break;
        if (rnorm < best * 0.999) {
            best = rnorm;
            since_best = 0;
        } else if (++since_best > 600) {
            break; // stagnated at the attainable accuracy
        }
        precondition();
        const double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }

    sys.apply(x, Ap);
    rnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ri = sys.rhs[i] - Ap[i];
        rnorm += ri * ri;
    }
    rnorm = std::sqrt(rnorm);
    if (rnorm > opts.required * bnorm) {
        // Residuals cannot be measured below the rounding of A x itself;
        // accept a solution that is backward stable at that scale.
        sys.apply_abs(x, Ap);
        const double scale =
            std::sqrt(std::inner_product(Ap.begin(), Ap.end(), Ap.begin(), 0.0));
        const double floor = 32.0 * std::numeric_limits<double>::epsilon() * scale;
        if (rnorm > floor) {
            char msg[96];
            std::snprintf(msg, sizeof(msg),
                          "solve_linear: CG stalled at relative residual %.3e", rnorm / bnorm);
            throw LinearSolverError(msg);
        }
    }
    project(x);
    return x;
}

FaceField reconstruct_fluxes_from_potential(const LinearSystem& sys,
                                            const std::vector<double>& psi) {
    const StructuredGrid2D& grid = sys.grid;
    if (psi.size() != sys.size())
        throw ShapeError("reconstruct_fluxes_from_potential: size mismatch");
    FaceField flux(grid);
    const int nx = grid.nx, ny = grid.ny;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            const std::size_t fidx = static_cast<std::size_t>(grid.x_face_index(i, j));
            double u;
            if (i == 0) {
                // outward normal is -x
                u = sys.is_dirichlet_x[fidx]
                        ? -(sys.cx[fidx] * (psi[j * nx] - sys.dirichlet_psi_x[fidx]))
                        : -sys.neumann_x[fidx];
            } else if (i == nx) {
                u = sys.is_dirichlet_x[fidx]
                        ? sys.cx[fidx] * (psi[j * nx + nx - 1] - sys.dirichlet_psi_x[fidx])
                        : sys.neumann_x[fidx];
            } else {
                u = sys.cx[fidx] * (psi[j * nx + i - 1] - psi[j * nx + i]);
            }
            flux.xflux[fidx] = u;
        }
    }
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t fidx = static_cast<std::size_t>(grid.y_face_index(i, j));
            double u;
            if (j == 0) {
                u = sys.is_dirichlet_y[fidx]
                        ? -(sys.cy[fidx] * (psi[i] - sys.dirichlet_psi_y[fidx]))
                        : -sys.neumann_y[fidx];
            } else if (j == ny) {
                u = sys.is_dirichlet_y[fidx]
                        ? sys.cy[fidx] * (psi[(ny - 1) * nx + i] - sys.dirichlet_psi_y[fidx])
                        : sys.neumann_y[fidx];
            } else {
                u = sys.cy[fidx] * (psi[(j - 1) * nx + i] - psi[j * nx + i]);
            }
            flux.yflux[fidx] = u;
        }
    }
    return flux;
}

FaceField reconstruct_fluxes(const CellField& pressures, const CellField& inverse_mobility,
                             const BoundarySpec& bcs, const BodyForce& f,
                             const StructuredGrid2D& grid) {
    if (pressures.size() != static_cast<std::size_t>(grid.cell_count()))
        throw ShapeError("reconstruct_fluxes: pressure size mismatch");
    const CellField q(pressures.size(), 0.0);
    const LinearSystem sys = assemble_linear_system(grid, inverse_mobility, bcs, q, f);
    std::vector<double> psi(pressures.size());
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const std::size_t c = static_cast<std::size_t>(j * grid.nx + i);
            psi[c] = pressures[c] - f.fx * grid.cell_center_x(i) -
                     f.fy * grid.cell_center_y(j) - sys.shift;
        }
    return reconstruct_fluxes_from_potential(sys, psi);
}

CellField mass_residual(const FaceField& flux, const CellField& q,
                        const StructuredGrid2D& grid) {
    if (!flux.matches(grid) || q.size() != static_cast<std::size_t>(grid.cell_count()))
        throw ShapeError("mass_residual: field sizes do not match grid");
    CellField res(q.size());
    const double ax = grid.x_face_area(), ay = grid.y_face_area();
    const double inv_vol = 1.0 / grid.cell_volume();
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double div =
                (flux.xflux[grid.x_face_index(i + 1, j)] - flux.xflux[grid.x_face_index(i, j)]) *
                    ax +
                (flux.yflux[grid.y_face_index(i, j + 1)] - flux.yflux[grid.y_face_index(i, j)]) *
                    ay;
            const std::size_t c = static_cast<std::size_t>(j * grid.nx + i);
            res[c] = div * inv_vol - q[c];
        }
    return res;
}

std::vector<std::uint8_t> classify_cells(const CellField& magnitude, double u_bar) {
    if (!(u_bar >= 0.0)) throw DomainError("classify_cells: u_bar must be nonnegative");
    std::vector<std::uint8_t> labels(magnitude.size());
    for (std::size_t c = 0; c < magnitude.size(); ++c)
        labels[c] = magnitude[c] > u_bar ? 1 : 0;
    return labels;
}

FlowSolution picard_solve(const StructuredGrid2D& grid, const MediumFields& medium,
                          const FluidProperties& fluid, const BoundarySpec& bcs,
                          const CellField& q, const BodyForce& f,
                          const RegularizationConfig& reg, const PicardOptions& opts) {
    medium.validate();
    fluid.validate();
    if (!(opts.tol > 0.0)) throw DomainError("picard_solve: tol must be positive");
    if (opts.max_iterations < 1) throw DomainError("picard_solve: max_iterations must be >= 1");
    if (!(opts.relaxation > 0.0) || opts.relaxation > 1.0)
        throw DomainError("picard_solve: relaxation must lie in (0,1]");

    const std::size_t n = medium.k.size();
    const double u_bar = flux_threshold(medium, fluid, medium.delta, medium.m);
    if (!(u_bar > 0.0))
        throw DomainError("picard_solve: zero flux threshold (delta must be positive)");
    const double eps_abs = reg.resolve_epsilon(u_bar);
    if (!(eps_abs > 0.0)) throw DomainError("picard_solve: epsilon must be positive");
    const double eps_rel = eps_abs / u_bar;

    std::vector<double> darcy(n), beta(n);
    for (std::size_t c = 0; c < n; ++c) {
        darcy[c] = fluid.nu / medium.k[c];
        beta[c] = medium.cF[c] *
                  std::pow(std::sqrt(medium.k[c]) / fluid.mu * u_bar, medium.m);
    }

    LinearSolveOptions lin;
    lin.rtol = opts.linear_rtol;
    lin.required = opts.linear_required;

    FlowSolution sol;
    sol.u_bar = u_bar;

    // Pure-Darcy initial solve.
    CellField lam(n);
    for (std::size_t c = 0; c < n; ++c) lam[c] = darcy[c];
    LinearSystem sys = assemble_linear_system(grid, lam, bcs, q, f);
    std::vector<double> psi = solve_linear(sys, lin);
    sol.flux = reconstruct_fluxes_from_potential(sys, psi);
    sol.magnitude = cell_flux_magnitude(sol.flux, grid);
    sol.iterations = 1;

    // Component tables sized from the Darcy envelope; the fixed point only
    // reduces magnitudes from there.
    double tau_need = 0.0;
    for (std::size_t c = 0; c < n; ++c) tau_need = std::max(tau_need, sol.magnitude[c] / u_bar);
    const double tau_max =
        std::max({4.0, 1.0 + 2.0 * reg.truncation * eps_rel, 1.5 * tau_need});
    const MollifiedLawEvaluator evaluator(medium.m, eps_rel, reg.variant, reg.table_points,
                                          reg.truncation, reg.quadrature_points, tau_max);

    const double tiny = 1e-14 * u_bar;
    for (int it = 2; it <= opts.max_iterations; ++it) {
        for (std::size_t c = 0; c < n; ++c) {
            const double lam_new =
                evaluator.lambda(darcy[c], beta[c], sol.magnitude[c] / u_bar);
            lam[c] = opts.relaxation * lam_new + (1.0 - opts.relaxation) * lam[c];
        }
        sys = assemble_linear_system(grid, lam, bcs, q, f);
        lin.initial_guess = &psi;
        psi = solve_linear(sys, lin);
        const FaceField flux = reconstruct_fluxes_from_potential(sys, psi);
        const CellField mag = cell_flux_magnitude(flux, grid);

        double inc = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double d = std::abs(mag[c] - sol.magnitude[c]);
            inc = std::max(inc, mag[c] < tiny ? d : d / mag[c]);
        }
        sol.residual_history.push_back(inc);
        sol.flux = flux;
        sol.magnitude = mag;
        sol.iterations = it;
        if (inc <= opts.tol) {
            sol.converged = true;
            break;
        }
        const std::size_t h = sol.residual_history.size();
        if (h >= 11) {
            bool growing = true;
            for (std::size_t i = h - 10; i < h; ++i)
                if (sol.residual_history[i] < sol.residual_history[i - 1]) {
                    growing = false;
                    break;
                }
            if (growing && sol.residual_history[h - 1] > 10.0 * sol.residual_history[h - 11])
                throw DivergenceError("picard_solve: increment grew tenfold over ten "
                                      "consecutive iterations");
        }
    }

    sol.pressure = sys.recover_pressure(psi);
    sol.labels = classify_cells(sol.magnitude, u_bar);
    const CellField res = mass_residual(sol.flux, q, grid);
    for (std::size_t c = 0; c < n; ++c)
        sol.mass_residual_max = std::max(sol.mass_residual_max, std::abs(res[c]));
    return sol;
}

} // namespace regimenet
