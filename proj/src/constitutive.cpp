#include "regimenet/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "regimenet/io.hpp"

namespace regimenet {

void FluidProperties::validate() const {
    if (!(mu > 0.0) || !(nu > 0.0) || !(rho > 0.0))
        throw DomainError("fluid properties must be strictly positive");
    if (std::abs(nu - mu / rho) > 1e-12 * nu)
        throw DomainError("fluid: nu must equal mu/rho");
}

void MediumFields::validate() const {
    const std::size_t n = k.size();
    if (phi.size() != n || cF.size() != n)
        throw ShapeError("medium: field sizes disagree");
    if (n == 0) throw ShapeError("medium: empty fields");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(k[i] > 0.0) || !std::isfinite(k[i]))
            throw DomainError("medium: permeability must be positive and finite");
        if (!(cF[i] > 0.0) || !std::isfinite(cF[i]))
            throw DomainError("medium: Forchheimer coefficient must be positive");
        if (!(phi[i] > 0.0) || !(phi[i] < 1.0))
            throw DomainError("medium: porosity must lie in (0,1)");
    }
    if (!(m >= 1.0)) throw DomainError("medium: Forchheimer exponent must be >= 1");
    if (!(delta >= 0.0) || !(delta < 1.0))
        throw DomainError("medium: tolerance delta must lie in [0,1)");
}

double reynolds(double t, const CellParams& cell) {
    return std::sqrt(cell.k) / cell.mu * t;
}

double forchheimer_number(double t, const CellParams& cell) {
    return std::pow(cell.cF, 1.0 / cell.m) * reynolds(t, cell);
}

double local_error(double t, const CellParams& cell) {
    const double x = cell.cF * std::pow(reynolds(t, cell), cell.m);
    return x / (1.0 + x);
}

double local_error_inverse(double delta, const CellParams& cell) {
    if (!(delta >= 0.0) || !(delta < 1.0))
        throw DomainError("local_error_inverse: delta must lie in [0,1)");
    const double factor = std::pow(delta / (1.0 - delta), 1.0 / cell.m);
    return factor * cell.mu / (std::pow(cell.cF, 1.0 / cell.m) * std::sqrt(cell.k));
}

double flux_threshold(const MediumFields& medium, const FluidProperties& fluid,
                      double delta, double m) {
    if (!(delta >= 0.0) || !(delta < 1.0))
        throw DomainError("flux_threshold: delta must lie in [0,1)");
    if (!(m >= 1.0)) throw DomainError("flux_threshold: m must be >= 1");
    if (delta == 0.0) return 0.0;
    double min_scale = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < medium.k.size(); ++i) {
        const double scale =
            fluid.mu / (std::pow(medium.cF[i], 1.0 / m) * std::sqrt(medium.k[i]));
        min_scale = std::min(min_scale, scale);
    }
    return std::pow(delta / (1.0 - delta), 1.0 / m) * min_scale;
}

double adaptive_coefficient(double t, const CellParams& cell, double u_bar) {
    if (t == u_bar)
        throw DomainError("adaptive_coefficient: t equals the threshold; "
                          "use the mollified coefficient at the transition");
    const double darcy = cell.nu / cell.k;
    if (t < u_bar) return darcy;
    return (1.0 + cell.cF * std::pow(reynolds(t, cell), cell.m)) * darcy;
}

double dissipation_density(double t, const CellParams& cell, double u_bar,
                           DissipationVariant variant) {
    const double darcy = cell.nu / cell.k;
    const double quad = 0.5 * darcy * t * t;
    if (t <= u_bar) return quad;
    const double gf =
        cell.cF * std::pow(std::sqrt(cell.k) / cell.mu, cell.m) * darcy *
        std::pow(t, cell.m + 2.0) / (cell.m + 2.0);
    return variant == DissipationVariant::LimitConsistent ? quad + gf : gf;
}

double kozeny_carman(double phi, double phi_ref, double K_ref) {
    if (!(phi > 0.0) || !(phi < 1.0))
        throw DomainError("kozeny_carman: porosity must lie in (0,1)");
    if (!(phi_ref > 0.0) || !(phi_ref < 1.0))
        throw DomainError("kozeny_carman: reference porosity must lie in (0,1)");
    const double num = phi * phi * phi * (1.0 - phi_ref) * (1.0 - phi_ref);
    const double den = phi_ref * phi_ref * phi_ref * (1.0 - phi) * (1.0 - phi);
    return K_ref * num / den;
}

namespace detail {

double BranchPoly::eval(double s) const {
    double v = c2 * s * s;
    if (cpow != 0.0) v += cpow * std::pow(s, power);
    return v;
}

namespace {

// Even extension: D_e(s) = D(|s|). side > 0 picks the right limit at a
// breakpoint, side < 0 the left limit; irrelevant elsewhere.
double eval_even(const DissipationSpec& d, double s, int side) {
    const double a = std::abs(s);
    bool above;
    if (a > d.jump_at) {
        above = true;
    } else if (a < d.jump_at) {
        above = false;
    } else if (s > 0.0) {
        above = side > 0; // |s| grows to the right of +jump_at
    } else if (s < 0.0) {
        above = side < 0; // |s| grows to the left of -jump_at
    } else {
        above = false; // jump_at == 0 and s == 0
    }
    return above ? d.above.eval(a) : d.below.eval(a);
}

struct TrapezoidSums {
    double numerator = 0.0; // integral of G'(t-s) D_e(s)
    double reference = 0.0; // integral of G'(t-s) s^2/2
};

void accumulate_interval(const DissipationSpec& d, double t, double inv_sigma2, double a,
                         double b, int n_nodes, TrapezoidSums& sums) {
    if (!(b > a) || n_nodes < 2) return;
    const double h = (b - a) / (n_nodes - 1);
    double num = 0.0, ref = 0.0;
    for (int i = 0; i < n_nodes; ++i) {
        const double s = (i == n_nodes - 1) ? b : a + i * h;
        const double x = t - s;
        const double gprime = -x * inv_sigma2 * std::exp(-0.5 * x * x * inv_sigma2);
        int side = 0;
        if (i == 0) side = +1;
        if (i == n_nodes - 1) side = -1;
        const double w = (i == 0 || i == n_nodes - 1) ? 0.5 : 1.0;
        num += w * gprime * eval_even(d, s, side);
        ref += w * gprime * (0.5 * s * s);
    }
    sums.numerator += h * num;
    sums.reference += h * ref;
}

} // namespace

double mollified_lambda(const DissipationSpec& d, double t, double sigma, double truncation,
                        int quad_points, double limit_at_zero) {
    if (!(sigma > 0.0)) throw DomainError("mollified_lambda: sigma must be positive");
    // Below this point the odd-in-t convolution cancels catastrophically;
    // the value is defined by its Darcy limit instead.
    if (t <= 1e-6 * sigma) return limit_at_zero;

    const double half_width = truncation * sigma;
    const double lo = t - half_width;
    const double hi = t + half_width;

    std::vector<double> cuts;
    cuts.push_back(lo);
    for (double b : {-d.jump_at, 0.0, d.jump_at})
        if (b > lo && b < hi) cuts.push_back(b);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const int total = std::max(quad_points, 256);
    const double inv_sigma2 = 1.0 / (sigma * sigma);
    TrapezoidSums sums;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double a = cuts[c], b = cuts[c + 1];
        const int n = std::max(
            3, static_cast<int>(std::ceil(total * (b - a) / (hi - lo))) + 1);
        accumulate_interval(d, t, inv_sigma2, a, b, n, sums);
    }
    // The reference integral of s^2/2 equals t for the untruncated kernel;
    // dividing by it instead of by t keeps the operator exact on quadratics.
    return sums.numerator / sums.reference;
}

} // namespace detail

namespace {

detail::DissipationSpec dissipation_spec(const CellParams& cell, double u_bar,
                                         DissipationVariant variant) {
    const double a = cell.nu / cell.k;
    detail::DissipationSpec d;
    d.jump_at = u_bar;
    d.below = {0.5 * a, 0.0, 0.0};
    const double cpow =
        a * cell.cF * std::pow(std::sqrt(cell.k) / cell.mu, cell.m) / (cell.m + 2.0);
    if (variant == DissipationVariant::LimitConsistent)
        d.above = {0.5 * a, cpow, cell.m + 2.0};
    else
        d.above = {0.0, cpow, cell.m + 2.0};
    return d;
}

} // namespace

MollifiedLawTable build_mollified_table(const CellParams& cell, double u_bar,
                                        const RegularizationConfig& reg, double t_max) {
    const double eps = reg.resolve_epsilon(u_bar);
    if (!(eps > 0.0)) throw DomainError("build_mollified_table: epsilon must be positive");
    if (!(t_max > 0.0)) throw DomainError("build_mollified_table: t_max must be positive");
    if (!(t_max > u_bar + reg.truncation * eps))
        throw DomainError("build_mollified_table: t_max must exceed u_bar + truncation*eps");
    if (reg.table_points < 64)
        throw DomainError("build_mollified_table: table_points must be >= 64");

    const detail::DissipationSpec spec = dissipation_spec(cell, u_bar, reg.variant);
    const double darcy = cell.nu / cell.k;
    const int n = reg.table_points;
    const int quad = std::max(reg.quadrature_points, 256);

    MollifiedLawTable table;
    table.cell = cell;
    table.u_bar = u_bar;
    table.epsilon = eps;
    table.variant = reg.variant;
    table.t_grid.resize(n);
    table.lambda_eps.resize(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const double t = t_max * (i + 1) / n;
        table.t_grid[i] = t;
        table.lambda_eps[i] =
            detail::mollified_lambda(spec, t, eps, reg.truncation, quad, darcy);
    }
    return table;
}

double mollified_coefficient(const MollifiedLawTable& table, double t) {
    if (table.empty()) throw StateError("mollified_coefficient: empty table");
    if (!(t >= 0.0)) throw DomainError("mollified_coefficient: t must be nonnegative");
    const auto& grid = table.t_grid;
    if (t <= grid.front()) return table.lambda_eps.front();
    const double t_max = grid.back();
    if (t >= t_max)
        return table.lambda_eps.back() * std::pow(t / t_max, table.cell.m);
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    const std::size_t lo = hi - 1;
    const double frac = (t - grid[lo]) / (grid[hi] - grid[lo]);
    return table.lambda_eps[lo] + frac * (table.lambda_eps[hi] - table.lambda_eps[lo]);
}

void write_mollified_table_csv(const std::string& path, const MollifiedLawTable& table) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << "t,lambda_eps\n";
    for (std::size_t i = 0; i < table.t_grid.size(); ++i)
        out << format_double(table.t_grid[i]) << "," << format_double(table.lambda_eps[i])
            << "\n";
}

MollifiedLawEvaluator::MollifiedLawEvaluator(double m, double eps_rel,
                                             DissipationVariant variant, int table_points,
                                             double truncation, int quadrature_points,
                                             double tau_max)
    : m_(m), eps_rel_(eps_rel), variant_(variant), tau_max_(tau_max) {
    if (!(eps_rel > 0.0)) throw DomainError("evaluator: epsilon must be positive");
    if (table_points < 64) throw DomainError("evaluator: table_points must be >= 64");
    if (!(tau_max > 1.0 + truncation * eps_rel))
        throw DomainError("evaluator: tau_max must exceed 1 + truncation*eps");
    const int quad = std::max(quadrature_points, 256);
    dtau_ = tau_max_ / table_points;

    detail::DissipationSpec d1;
    d1.jump_at = 1.0;
    d1.below = {0.0, 0.0, 0.0};
    d1.above = {0.0, 1.0 / (m + 2.0), m + 2.0};
    g1_.resize(table_points);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < table_points; ++i)
        g1_[i] = detail::mollified_lambda(d1, (i + 1) * dtau_, eps_rel, truncation, quad, 0.0);

    if (variant == DissipationVariant::PaperLiteral) {
        detail::DissipationSpec d0;
        d0.jump_at = 1.0;
        d0.below = {0.5, 0.0, 0.0};
        d0.above = {0.0, 0.0, 0.0};
        g0_.resize(table_points);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < table_points; ++i)
            g0_[i] =
                detail::mollified_lambda(d0, (i + 1) * dtau_, eps_rel, truncation, quad, 1.0);
    }
    // Limit-consistent: D0 is s^2/2 everywhere, identical to the quadrature
    // reference, so g0 is exactly 1 and no table is stored.
}

namespace {

double uniform_interp(const std::vector<double>& values, double dtau, double tau) {
    // node i sits at tau = (i+1)*dtau
    const double pos = tau / dtau - 1.0;
    if (pos <= 0.0) return values.front();
    const double last = static_cast<double>(values.size() - 1);
    if (pos >= last) return values.back();
    const std::size_t i0 = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i0);
    return values[i0] + frac * (values[i0 + 1] - values[i0]);
}

} // namespace

double MollifiedLawEvaluator::interp_g0(double tau) const {
    if (g0_.empty()) return 1.0;
    return uniform_interp(g0_, dtau_, tau); // constant beyond the last node
}

double MollifiedLawEvaluator::interp_g1(double tau) const {
    if (tau >= tau_max_)
        return g1_.back() * std::pow(tau / tau_max_, m_);
    return uniform_interp(g1_, dtau_, tau);
}

double MollifiedLawEvaluator::lambda(double a, double beta, double tau) const {
    return a * (interp_g0(tau) + beta * interp_g1(tau));
}

} // namespace regimenet
