#pragma once

#include <string>
#include <vector>

#include "regimenet/errors.hpp"
#include "regimenet/grid.hpp"

namespace regimenet {

struct FluidProperties {
    double mu = 1e-3;   // dynamic viscosity, Pa s
    double nu = 1e-6;   // kinematic viscosity, m^2 s^-1
    double rho = 1000;  // density, kg m^-3

    void validate() const;
    static FluidProperties water() { return {1e-3, 1e-6, 1000.0}; }
};

/// Space-dependent medium data plus the scalar law parameters.
struct MediumFields {
    CellField k;    // permeability, m^2, > 0
    CellField phi;  // porosity, in (0,1)
    CellField cF;   // Forchheimer coefficient, dimensionless, > 0
    double m = 1.0;     // Forchheimer exponent, >= 1
    double delta = 0.1; // error tolerance, in [0,1)

    void validate() const;
};

/// Pointwise physical parameters of one cell, the unit every pointwise law
/// operates on.
struct CellParams {
    double k = 0.0;   // m^2
    double cF = 0.0;  // dimensionless
    double mu = 0.0;  // Pa s
    double nu = 0.0;  // m^2 s^-1
    double m = 1.0;   // exponent
};

enum class DissipationVariant {
    // The written integrand: the fast branch keeps only the nonlinear term.
    PaperLiteral,
    // Adds the linear term on the fast branch so that the epsilon -> 0 limit
    // of the mollified coefficient reproduces the adaptive law. Default.
    LimitConsistent,
};

struct RegularizationConfig {
    // Mollifier standard deviation. Interpreted as a multiple of the flux
    // threshold when epsilon_relative is set (the default), otherwise as an
    // absolute flux magnitude.
    double epsilon = 0.1;
    bool epsilon_relative = true;
    int table_points = 512;       // >= 64
    double truncation = 6.0;      // kernel support half-width, multiples of epsilon
    int quadrature_points = 4096; // per convolution evaluation, >= 256
    DissipationVariant variant = DissipationVariant::LimitConsistent;

    double resolve_epsilon(double u_bar) const {
        return epsilon_relative ? epsilon * u_bar : epsilon;
    }
};

/// Tabulated mollified coefficient lambda_eps(t) for one cell.
struct MollifiedLawTable {
    std::vector<double> t_grid;     // sorted flux magnitudes, spanning (0, t_max]
    std::vector<double> lambda_eps; // coefficient at each node, s^-1 scale
    CellParams cell;                // provenance
    double u_bar = 0.0;
    double epsilon = 0.0; // absolute standard deviation used for the build
    DissipationVariant variant = DissipationVariant::LimitConsistent;

    bool empty() const { return t_grid.empty(); }
};

/// Reynolds number (sqrt(k)/mu) * t.
double reynolds(double t, const CellParams& cell);

/// m-th Forchheimer number cF^(1/m) * (sqrt(k)/mu) * t.
double forchheimer_number(double t, const CellParams& cell);

/// Relative force discrepancy between the Darcy and generalized Forchheimer
/// laws: x/(1+x) with x = cF * ((sqrt(k)/mu) t)^m. Increasing bijection from
/// [0, inf) onto [0, 1).
double local_error(double t, const CellParams& cell);

/// Per-cell inverse of the local error at tolerance delta:
/// w = (delta/(1-delta))^(1/m) * mu / (cF^(1/m) sqrt(k)).
double local_error_inverse(double delta, const CellParams& cell);

/// Flux threshold u_bar = (delta/(1-delta))^(1/m) * min over cells of
/// mu / (cF^(1/m) sqrt(k)). Throws DomainError for delta outside [0,1).
double flux_threshold(const MediumFields& medium, const FluidProperties& fluid,
                      double delta, double m);

/// Adaptive law coefficient: nu/k below the threshold and
/// (1 + cF Re^m) nu/k above it. Throws DomainError at t == u_bar.
double adaptive_coefficient(double t, const CellParams& cell, double u_bar);

/// Dissipation energy density at flux magnitude t.
double dissipation_density(double t, const CellParams& cell, double u_bar,
                           DissipationVariant variant);

/// Tabulates lambda_eps(t) = d/dt (G_eps * D)(t) / t on a uniform grid
/// spanning (0, t_max], with D extended evenly to negative arguments and the
/// convolution evaluated by composite trapezoid quadrature over
/// [t - truncation*eps, t + truncation*eps].
MollifiedLawTable build_mollified_table(const CellParams& cell, double u_bar,
                                        const RegularizationConfig& reg, double t_max);

/// Linear interpolation on the table grid; constant extrapolation below the
/// first node and power-law extrapolation lambda(t_max) * (t/t_max)^m above
/// the last node. Throws StateError on an empty table.
double mollified_coefficient(const MollifiedLawTable& table, double t);

/// Two-column CSV (t, lambda_eps) dump for debugging.
void write_mollified_table_csv(const std::string& path, const MollifiedLawTable& table);

/// Kozeny-Carman porosity-to-permeability map
/// K_ref * phi^3 (1-phi_ref)^2 / (phi_ref^3 (1-phi)^2).
double kozeny_carman(double phi, double phi_ref = 0.35, double K_ref = 1.01e-9);

// ---------------------------------------------------------------------------
// Shared mollified-law evaluation for whole fields.
//
// In threshold-normalized units tau = t/u_bar the dissipation splits as
//   D(t) = (nu/k) u_bar^2 [ D0(tau) + beta * D1(tau) ],
//   beta = cF (sqrt(k)/mu * u_bar)^m,
// and convolution is linear, so two component tables g0, g1 on a tau grid
// serve every cell of a solve:
//   lambda_eps(t) = (nu/k) [ g0(t/u_bar) + beta * g1(t/u_bar) ].
// For the limit-consistent variant g0 is identically 1.
// ---------------------------------------------------------------------------
class MollifiedLawEvaluator {
public:
    /// eps_rel = epsilon / u_bar.
    MollifiedLawEvaluator(double m, double eps_rel, DissipationVariant variant,
                          int table_points, double truncation, int quadrature_points,
                          double tau_max);

    /// lambda_eps for a cell with Darcy coefficient a = nu/k and nonlinear
    /// weight beta = cF * Re(u_bar)^m, at normalized magnitude tau.
    double lambda(double a, double beta, double tau) const;

    double tau_max() const { return tau_max_; }
    double component_g0(double tau) const { return interp_g0(tau); }
    double component_g1(double tau) const { return interp_g1(tau); }

private:
    double interp_g0(double tau) const;
    double interp_g1(double tau) const;

    double m_;
    double eps_rel_;
    DissipationVariant variant_;
    double tau_max_;
    double dtau_;
    std::vector<double> g0_; // empty when identically 1
    std::vector<double> g1_;
};

namespace detail {

// One branch of the dissipation density: c2 s^2 + cpow s^power.
struct BranchPoly {
    double c2 = 0.0;
    double cpow = 0.0;
    double power = 0.0;
    double eval(double s) const;
};

// Even, piecewise-smooth dissipation density with a possible jump at
// |s| = jump_at.
struct DissipationSpec {
    double jump_at = 0.0;
    BranchPoly below;
    BranchPoly above;
};

// d/dt (G_sigma * D)(t) / t by composite trapezoid quadrature over
// [t - truncation*sigma, t + truncation*sigma], split at the breakpoints of
// the even extension of D. The division by t is realized through the same
// quadrature applied to the reference density s^2/2, which makes the
// operator exact on quadratics despite kernel truncation.
double mollified_lambda(const DissipationSpec& d, double t, double sigma, double truncation,
                        int quad_points, double limit_at_zero);

} // namespace detail

} // namespace regimenet
