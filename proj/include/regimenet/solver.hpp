#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "regimenet/constitutive.hpp"
#include "regimenet/grid.hpp"

namespace regimenet {

struct BoundaryCondition {
    enum class Kind { Neumann, Dirichlet };
    Kind kind = Kind::Neumann;
    // Outward-positive normal mass flux, kg m^-2 s^-1 (Neumann).
    double neumann_flux = 0.0;
    // Pressure p0(x, y), Pa (Dirichlet).
    std::function<double(double, double)> dirichlet;

    static BoundaryCondition no_flux() { return {}; }
    static BoundaryCondition neumann(double outward_flux) {
        BoundaryCondition bc;
        bc.neumann_flux = outward_flux;
        return bc;
    }
    static BoundaryCondition pressure(std::function<double(double, double)> p0) {
        BoundaryCondition bc;
        bc.kind = Kind::Dirichlet;
        bc.dirichlet = std::move(p0);
        return bc;
    }
    static BoundaryCondition pressure(double constant) {
        return pressure([constant](double, double) { return constant; });
    }
};

/// One condition per side; every boundary face is covered exactly once.
struct BoundarySpec {
    BoundaryCondition left, right, bottom, top;
    bool any_dirichlet() const {
        return left.kind == BoundaryCondition::Kind::Dirichlet ||
               right.kind == BoundaryCondition::Kind::Dirichlet ||
               bottom.kind == BoundaryCondition::Kind::Dirichlet ||
               top.kind == BoundaryCondition::Kind::Dirichlet;
    }
};

/// Constant external body force density, Pa m^-1 (e.g. (0, -rho*g)).
struct BodyForce {
    double fx = 0.0;
    double fy = 0.0;
};

constexpr double kGravity = 9.81; // m s^-2

/// Symmetric positive (semi-)definite 5-point system over cell potentials.
/// Assembly works in the shifted potential psi = p - f.x - shift, which
/// absorbs the constant body force exactly and removes the large hydrostatic
/// offset from the solve.
struct LinearSystem {
    StructuredGrid2D grid;
    std::vector<double> diag;
    // Area-scaled face conductances. Interior entries couple the two
    // neighbouring cells, boundary entries hold the Dirichlet half-cell
    // conductance (zero for Neumann faces).
    std::vector<double> tx;
    std::vector<double> ty;
    std::vector<double> rhs;
    // Face conductance per unit area (flux per potential difference).
    std::vector<double> cx;
    std::vector<double> cy;
    // Boundary data in potential form.
    std::vector<double> dirichlet_psi_x; // by x-face index; 0 where unused
    std::vector<double> dirichlet_psi_y;
    std::vector<double> neumann_x; // imposed outward flux by x-face index
    std::vector<double> neumann_y;
    std::vector<std::uint8_t> is_dirichlet_x;
    std::vector<std::uint8_t> is_dirichlet_y;
    BodyForce body_force;
    double shift = 0.0; // mean Dirichlet potential removed before solving
    bool singular = false; // all-Neumann problem, defined up to a constant

    std::size_t size() const { return diag.size(); }
    void apply(const std::vector<double>& x, std::vector<double>& y) const;
    void apply_serial(const std::vector<double>& x, std::vector<double>& y) const;
    /// y = |A| |x|, the scale against which the residual of A x = b can be
    /// evaluated at all in floating point.
    void apply_abs(const std::vector<double>& x, std::vector<double>& y) const;
    /// p = psi + shift + f.x at the cell center.
    CellField recover_pressure(const std::vector<double>& psi) const;
};

/// Builds the TPFA system for cell potentials. inverse_mobility is the
/// per-cell coefficient Lambda in -grad p + f = Lambda u (s^-1 scale) and
/// must be strictly positive; q is the mass source per unit volume,
/// kg m^-3 s^-1. Face conductances use the harmonic mean of the per-cell
/// mobilities 1/Lambda.
LinearSystem assemble_linear_system(const StructuredGrid2D& grid,
                                    const CellField& inverse_mobility, const BoundarySpec& bcs,
                                    const CellField& q, const BodyForce& f);

struct LinearSolveOptions {
    double rtol = 1e-13;      // conjugate-gradient target
    double required = 1e-10;  // residual that must be met, else LinearSolverError
    int max_iterations = 0;   // 0: choose from the system size
    const std::vector<double>* initial_guess = nullptr;
};

/// Jacobi-preconditioned conjugate gradient. Returns the potential vector.
std::vector<double> solve_linear(const LinearSystem& system,
                                 const LinearSolveOptions& opts = {});

/// Face fluxes from solved cell potentials (psi space; exact for Neumann
/// faces by construction).
FaceField reconstruct_fluxes_from_potential(const LinearSystem& system,
                                            const std::vector<double>& psi);

/// Face fluxes from cell pressures, for callers that do not hold the
/// assembled system. Mirrors the assembly conventions.
FaceField reconstruct_fluxes(const CellField& pressures, const CellField& inverse_mobility,
                             const BoundarySpec& bcs, const BodyForce& f,
                             const StructuredGrid2D& grid);

/// Per-cell div(u) - q, kg m^-3 s^-1.
CellField mass_residual(const FaceField& flux, const CellField& q,
                        const StructuredGrid2D& grid);

/// 1 = fast (GF) where magnitude > u_bar, 0 = slow (Darcy) otherwise;
/// the tie at magnitude == u_bar is labeled Darcy.
std::vector<std::uint8_t> classify_cells(const CellField& magnitude, double u_bar);

struct PicardOptions {
    double tol = 1e-6;        // max relative cell-magnitude change
    int max_iterations = 500; // >= 1
    double relaxation = 1.0;  // coefficient relaxation omega in (0,1]
    double linear_rtol = 1e-13;
    // Accepted linear residual before a solve counts as failed. The target
    // above is what CG aims for; high-contrast transients may stop short of
    // it without harming the outer 1e-6 fixed-point tolerance.
    double linear_required = 1e-8;
};

struct FlowSolution {
    CellField pressure;   // Pa
    FaceField flux;       // kg m^-2 s^-1
    CellField magnitude;  // kg m^-2 s^-1
    std::vector<std::uint8_t> labels; // 1 = GF, 0 = Darcy
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history; // relative increments per iteration
    double u_bar = 0.0;
    double mass_residual_max = 0.0;
};

/// Explicit fixed-point resolution of the regularized adaptive model: the
/// nonlinear coefficient is lagged at the previous flux magnitude and each
/// step solves a linear Darcy-type system.
FlowSolution picard_solve(const StructuredGrid2D& grid, const MediumFields& medium,
                          const FluidProperties& fluid, const BoundarySpec& bcs,
                          const CellField& q, const BodyForce& f,
                          const RegularizationConfig& reg, const PicardOptions& opts = {});

} // namespace regimenet
