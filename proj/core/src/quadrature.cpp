#include "ancient/quadrature.hpp"
#include "ancient/error.hpp"

#include <algorithm>
#include <cmath>

namespace ancient {

SampledField::SampledField(SpaceTimeGrid g)
    : grid(std::move(g)), values(static_cast<std::size_t>(grid.nt()) * grid.spatial_size(), 0.0) {}

SampledField::SampledField(SpaceTimeGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    require(values.size() == static_cast<std::size_t>(grid.nt()) * grid.spatial_size(),
            "SampledField: value count does not match the grid");
}

SpacePoint SampledField::point(int i, int j, int l) const {
    SpacePoint x;
    x.x0 = grid.x0(i);
    x.cross[0] = grid.cross(0, j);
    if (grid.domain().n() == 2) x.cross[1] = grid.cross(1, l);
    return x;
}

std::vector<double> simpson_weights(int cells, double h) {
    require(cells >= 1, "simpson_weights: need at least one cell");
    std::vector<double> w(static_cast<std::size_t>(cells) + 1, 0.0);
    const int even = cells - (cells % 2);
    for (int i = 0; i < even; i += 2) {
        w[static_cast<std::size_t>(i)] += h / 3.0;
        w[static_cast<std::size_t>(i) + 1] += 4.0 * h / 3.0;
        w[static_cast<std::size_t>(i) + 2] += h / 3.0;
    }
    if (cells % 2 == 1) {
        w[static_cast<std::size_t>(cells) - 1] += h / 2.0;
        w[static_cast<std::size_t>(cells)] += h / 2.0;
    }
    return w;
}

double time_factor(double s, double time_extent) {
    if (s == 0.0) return time_extent;
    return -std::expm1(-s * time_extent) / s;
}

double space_factor(double b, double half_width) {
    if (b == 0.0) return 2.0 * half_width;
    return 2.0 * std::sinh(b * half_width) / b;
}

double log_time_factor(double s, double time_extent) {
    if (s == 0.0) return std::log(time_extent);
    if (s > 0.0) return std::log(-std::expm1(-s * time_extent)) - std::log(s);
    const double m = -s;
    return m * time_extent + std::log(-std::expm1(-m * time_extent)) - std::log(m);
}

double log_space_factor(double b, double half_width) {
    if (b == 0.0) return std::log(2.0 * half_width);
    const double m = std::abs(b);
    return m * half_width + std::log(-std::expm1(-2.0 * m * half_width)) - std::log(m);
}

double inner_product_closed_box(const SeparatedSolution& u, const SeparatedSolution& v, double time_extent,
                                double half_width) {
    if (u.mode.k != v.mode.k) return 0.0;
    return u.coeff * v.coeff * time_factor(u.rho + v.rho, time_extent) * space_factor(u.alpha + v.alpha, half_width);
}

double inner_product_closed(const SeparatedSolution& u, const SeparatedSolution& v, double r) {
    require(r > 0.0, "inner_product_closed: radius must be positive");
    return inner_product_closed_box(u, v, r * r, r);
}

double inner_product_closed(const SolutionSum& u, const SolutionSum& v, double r) {
    double s = 0.0;
    for (const auto& a : u)
        for (const auto& b : v) s += inner_product_closed(a, b, r);
    return s;
}

double energy_closed(const SolutionSum& u, double r) { return inner_product_closed(u, u, r); }

double gradient_inner_closed(const SeparatedSolution& u, const SeparatedSolution& v, double r) {
    if (u.mode.k != v.mode.k) return 0.0;
    return (u.alpha * v.alpha + u.mode.mu) * inner_product_closed(u, v, r);
}

double gradient_energy_closed(const SolutionSum& u, double r) {
    double s = 0.0;
    for (const auto& a : u)
        for (const auto& b : u) s += gradient_inner_closed(a, b, r);
    return s;
}

double log_energy_closed(const SeparatedSolution& u, double r) {
    require(r > 0.0, "log_energy_closed: radius must be positive");
    require(u.coeff != 0.0, "log_energy_closed: zero solution has no logarithmic energy");
    return 2.0 * std::log(std::abs(u.coeff)) + log_time_factor(2.0 * u.rho, r * r) + log_space_factor(2.0 * u.alpha, r);
}

namespace {

int center_index(const SpaceTimeGrid& g) { return g.cells_x0() / 2; }

// Simpson sums of the cross-section product psi_u psi_v on the grid nodes.
double cross_sum(const Mode& a, const Mode& b, const SpaceTimeGrid& grid) {
    const StripDomain& d = grid.domain();
    const auto w1 = simpson_weights(grid.cells_cross(0), grid.h(0));
    if (d.n() == 1) {
        double s = 0.0;
        for (int j = 0; j < grid.n_cross(0); ++j) {
            SpacePoint x;
            x.cross[0] = grid.cross(0, j);
            s += w1[static_cast<std::size_t>(j)] * a.value(x, d) * b.value(x, d);
        }
        return s;
    }
    const auto w2 = simpson_weights(grid.cells_cross(1), grid.h(1));
    double s = 0.0;
    for (int j = 0; j < grid.n_cross(0); ++j)
        for (int l = 0; l < grid.n_cross(1); ++l) {
            SpacePoint x;
            x.cross = {grid.cross(0, j), grid.cross(1, l)};
            s += w1[static_cast<std::size_t>(j)] * w2[static_cast<std::size_t>(l)] * a.value(x, d) * b.value(x, d);
        }
    return s;
}

} // namespace

double inner_product_quadrature(const SeparatedSolution& u, const SeparatedSolution& v, const SnappedCylinder& q,
                                const SpaceTimeGrid& grid) {
    const auto wt = simpson_weights(q.time_steps, grid.tau());
    double st = 0.0;
    for (int k = 0; k <= q.time_steps; ++k) {
        const double t = -q.time_extent + k * grid.tau();
        st += wt[static_cast<std::size_t>(k)] * std::exp((u.rho + v.rho) * t);
    }
    const auto wx = simpson_weights(2 * q.half_cells, grid.h0());
    double sx = 0.0;
    for (int i = 0; i <= 2 * q.half_cells; ++i) {
        const double x0 = (i - q.half_cells) * grid.h0();
        sx += wx[static_cast<std::size_t>(i)] * std::exp((u.alpha + v.alpha) * x0);
    }
    return u.coeff * v.coeff * st * sx * cross_sum(u.mode, v.mode, grid);
}

double inner_product_quadrature(const SolutionSum& u, const SolutionSum& v, double r, const SpaceTimeGrid& grid) {
    const SnappedCylinder q = snap_cylinder(grid, r);
    double s = 0.0;
    for (const auto& a : u)
        for (const auto& b : v) s += inner_product_quadrature(a, b, q, grid);
    return s;
}

double inner_product_quadrature(const SampledField& u, const SampledField& v, const SnappedCylinder& q) {
    const SpaceTimeGrid& g = u.grid;
    require(v.values.size() == u.values.size() && v.grid.nt() == g.nt() && v.grid.n0() == g.n0(),
            "inner_product_quadrature: fields live on different grids");
    const auto wt = simpson_weights(q.time_steps, g.tau());
    const auto wx = simpson_weights(2 * q.half_cells, g.h0());
    const auto w1 = simpson_weights(g.cells_cross(0), g.h(0));
    const std::vector<double> w2 = g.domain().n() == 2 ? simpson_weights(g.cells_cross(1), g.h(1)) : std::vector<double>{1.0};
    const int k0 = g.time_steps() - q.time_steps;
    const int i0 = center_index(g) - q.half_cells;

    double total = 0.0;
    for (int a = 0; a <= q.time_steps; ++a) {
        double slab = 0.0;
        for (int b = 0; b <= 2 * q.half_cells; ++b) {
            double line = 0.0;
            for (int j = 0; j < g.n_cross(0); ++j)
                for (int l = 0; l < u.n2(); ++l) {
                    const std::size_t idx = u.index(k0 + a, i0 + b, j, l);
                    line += w1[static_cast<std::size_t>(j)] * w2[static_cast<std::size_t>(l)] * u.values[idx] * v.values[idx];
                }
            slab += wx[static_cast<std::size_t>(b)] * line;
        }
        total += wt[static_cast<std::size_t>(a)] * slab;
    }
    return total;
}

double inner_product_quadrature(const SampledField& u, const SampledField& v, double r) {
    return inner_product_quadrature(u, v, snap_cylinder(u.grid, r));
}

SampledField sample_solution(const SolutionSum& u, const SpaceTimeGrid& grid) {
    SampledField f(grid);
    const StripDomain& d = grid.domain();
    for (int k = 0; k < grid.nt(); ++k)
        for (int i = 0; i < grid.n0(); ++i)
            for (int j = 0; j < grid.n_cross(0); ++j)
                for (int l = 0; l < f.n2(); ++l) {
                    const SpacePoint x = f.point(i, j, l);
                    double s = 0.0;
                    for (const auto& term : u) s += term.value(grid.time(k), x, d);
                    f.at(k, i, j, l) = s;
                }
    return f;
}

std::string to_string(GramMethod m) { return m == GramMethod::ClosedForm ? "closed-form" : "quadrature"; }

double GramMatrix::entry(std::size_t i, std::size_t j) const {
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    return core(a, b) * std::exp(log_scale(a) + log_scale(b));
}

Matrix GramMatrix::entries() const {
    Matrix m(core.rows(), core.cols());
    for (Eigen::Index i = 0; i < core.rows(); ++i)
        for (Eigen::Index j = 0; j < core.cols(); ++j) m(i, j) = core(i, j) * std::exp(log_scale(i) + log_scale(j));
    return m;
}

Matrix GramMatrix::correlation() const {
    Matrix c = core;
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j) {
            const double den = std::sqrt(core(i, i) * core(j, j));
            c(i, j) = den > 0.0 ? core(i, j) / den : 0.0;
        }
    return c;
}

double GramMatrix::log_diagonal(std::size_t i) const {
    const auto a = static_cast<Eigen::Index>(i);
    return std::log(core(a, a)) + 2.0 * log_scale(a);
}

double GramMatrix::conditioning() const {
    const SymmetricEigen e = jacobi_eigen(correlation());
    return e.values(0) > 0.0 ? e.values(e.values.size() - 1) / e.values(0) : 0.0;
}

namespace {

// Per-basis exponential scale: |alpha| r + max(0, -rho) r^2 bounds the
// growth of u over Q_r.
double basis_log_scale(const SeparatedSolution& u, double r) {
    return std::abs(u.alpha) * r + std::max(0.0, -u.rho) * r * r;
}

double scaled_closed_entry(const SeparatedSolution& a, const SeparatedSolution& b, double r, double la, double lb) {
    if (a.mode.k != b.mode.k || a.coeff == 0.0 || b.coeff == 0.0) return 0.0;
    const double log_mag = log_time_factor(a.rho + b.rho, r * r) + log_space_factor(a.alpha + b.alpha, r);
    return a.coeff * b.coeff * std::exp(log_mag - la - lb);
}

} // namespace

GramMatrix gram_of_combinations(const SolutionSpan& span, const Matrix& combos, double r, GramMethod method,
                                const std::optional<SpaceTimeGrid>& grid) {
    require(r > 0.0, "gram: radius must be positive");
    require(combos.rows() > 0, "gram: span must be nonempty");
    const auto& basis = span.basis();
    const auto nb = static_cast<Eigen::Index>(basis.size());
    require(combos.cols() == nb, "gram: combination vectors must match the basis size");

    GramMatrix g;
    g.r = r;
    g.method = method;

    Matrix core_b(nb, nb);
    Vector ls_b = Vector::Zero(nb);
    if (method == GramMethod::ClosedForm) {
        g.snapped_r = r;
        g.time_extent = r * r;
        for (Eigen::Index a = 0; a < nb; ++a) ls_b(a) = basis_log_scale(basis[static_cast<std::size_t>(a)], r);
        for (Eigen::Index a = 0; a < nb; ++a)
            for (Eigen::Index b = 0; b <= a; ++b) {
                core_b(a, b) = scaled_closed_entry(basis[static_cast<std::size_t>(a)], basis[static_cast<std::size_t>(b)], r,
                                                   ls_b(a), ls_b(b));
                core_b(b, a) = core_b(a, b);
            }
    } else {
        require(grid.has_value(), "gram: quadrature method needs a grid");
        const SnappedCylinder q = snap_cylinder(*grid, r);
        g.snapped_r = q.r;
        g.time_extent = q.time_extent;
        for (Eigen::Index a = 0; a < nb; ++a)
            for (Eigen::Index b = 0; b <= a; ++b) {
                core_b(a, b) = inner_product_quadrature(basis[static_cast<std::size_t>(a)], basis[static_cast<std::size_t>(b)], q, *grid);
                core_b(b, a) = core_b(a, b);
            }
    }

    const Eigen::Index m = combos.rows();
    g.log_scale = Vector::Zero(m);
    Matrix scaled = Matrix::Zero(m, nb);
    for (Eigen::Index i = 0; i < m; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (Eigen::Index a = 0; a < nb; ++a)
            if (combos(i, a) != 0.0) best = std::max(best, std::log(std::abs(combos(i, a))) + ls_b(a));
        if (!std::isfinite(best)) best = 0.0;
        g.log_scale(i) = best;
        for (Eigen::Index a = 0; a < nb; ++a)
            if (combos(i, a) != 0.0)
                scaled(i, a) = std::copysign(std::exp(std::log(std::abs(combos(i, a))) + ls_b(a) - best), combos(i, a));
    }
    // Accumulate in fixed index order for reproducibility.
    g.core = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            double s = 0.0;
            for (Eigen::Index a = 0; a < nb; ++a) {
                if (scaled(i, a) == 0.0) continue;
                double inner = 0.0;
                for (Eigen::Index b = 0; b < nb; ++b) inner += core_b(a, b) * scaled(j, b);
                s += scaled(i, a) * inner;
            }
            g.core(i, j) = s;
            g.core(j, i) = s;
        }
    for (Eigen::Index i = 0; i < m; ++i) g.basis_ids.push_back("c" + std::to_string(i + 1));
    return g;
}

GramMatrix gram(const SolutionSpan& span, double r, GramMethod method, const std::optional<SpaceTimeGrid>& grid) {
    GramMatrix g = gram_of_combinations(span, span.coefficients(), r, method, grid);
    g.basis_ids = span.ids();
    check_gram(g);
    return g;
}

void check_gram(const GramMatrix& g) {
    if (symmetry_defect(g.core) > 1e-14)
        fail(ErrorCategory::Invariant, "GramMatrix: not symmetric to 1e-14 relative");
    const SymmetricEigen e = jacobi_eigen(g.correlation());
    const double top = e.values(0);
    const double bottom = e.values(e.values.size() - 1);
    if (bottom < -1e-10 * std::max(top, 0.0))
        fail(ErrorCategory::Invariant, "GramMatrix: not positive semi-definite (min eigenvalue " +
                                           std::to_string(bottom) + ")");
}

double annulus_energy_closed(const SolutionSum& u, double r, double big_r) {
    require(r > 0.0 && r < big_r, "annulus_energy: need 0 < r < R");
    return energy_closed(u, big_r) - energy_closed(u, r);
}

double annulus_energy_quadrature(const SampledField& u, double r, double big_r) {
    require(r > 0.0 && r < big_r, "annulus_energy: need 0 < r < R");
    return inner_product_quadrature(u, u, big_r) - inner_product_quadrature(u, u, r);
}

} // namespace ancient
