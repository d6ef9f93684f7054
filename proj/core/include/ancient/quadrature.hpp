#pragma once

#include "ancient/field.hpp"
#include "ancient/geometry.hpp"
#include "ancient/linalg.hpp"
#include "ancient/solutions.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ancient {

/// Composite Simpson weights for `cells` intervals of width h. An odd cell
/// count uses Simpson on the first cells-1 intervals and the trapezoid rule
/// on the last one.
std::vector<double> simpson_weights(int cells, double h);

/// int_{-T}^{0} e^{s t} dt, with the analytic limit T at s = 0.
double time_factor(double s, double time_extent);
/// int_{-a}^{a} e^{b x} dx, with the analytic limit 2a at b = 0.
double space_factor(double b, double half_width);
/// Natural logarithms of the two factors above (finite for every input).
double log_time_factor(double s, double time_extent);
double log_space_factor(double b, double half_width);

/// J over the box (-T,0] x (-a,a) x Omega0 of two separated solutions.
double inner_product_closed_box(const SeparatedSolution& u, const SeparatedSolution& v, double time_extent,
                                double half_width);
/// J_r(u,v) = int_{Q_r} u v, exact.
double inner_product_closed(const SeparatedSolution& u, const SeparatedSolution& v, double r);
double inner_product_closed(const SolutionSum& u, const SolutionSum& v, double r);
double energy_closed(const SolutionSum& u, double r);

/// int_{Q_r} grad u . grad v, exact: (alpha_u alpha_v + mu) J_r(u,v) for equal
/// modes, 0 otherwise.
double gradient_inner_closed(const SeparatedSolution& u, const SeparatedSolution& v, double r);
double gradient_energy_closed(const SolutionSum& u, double r);

/// log I_u(r) for a single separated solution; finite even where I_u overflows.
double log_energy_closed(const SeparatedSolution& u, double r);

/// Tensor Simpson over the snapped Q_r of `grid` applied to the products of
/// two separated solutions. The rule factorizes over the axes for separated
/// integrands, so it is evaluated as a product of one-dimensional sums.
double inner_product_quadrature(const SeparatedSolution& u, const SeparatedSolution& v, const SnappedCylinder& q,
                                const SpaceTimeGrid& grid);
double inner_product_quadrature(const SolutionSum& u, const SolutionSum& v, double r, const SpaceTimeGrid& grid);

/// Tensor Simpson over the snapped Q_r for sampled fields on a common grid;
/// node order and accumulation order are fixed.
double inner_product_quadrature(const SampledField& u, const SampledField& v, const SnappedCylinder& q);
double inner_product_quadrature(const SampledField& u, const SampledField& v, double r);

/// Samples a solution sum on every node of `grid`.
SampledField sample_solution(const SolutionSum& u, const SpaceTimeGrid& grid);

enum class GramMethod { ClosedForm, Quadrature };
std::string to_string(GramMethod m);

/// J_r restricted to a family of solutions, stored as
/// entries = diag(e^{log_scale}) core diag(e^{log_scale})
/// so that radii with astronomically large energies stay representable.
struct GramMatrix {
    double r = 0.0;
    double snapped_r = 0.0;
    double time_extent = 0.0;
    GramMethod method = GramMethod::ClosedForm;
    std::vector<std::string> basis_ids;
    Matrix core;
    Vector log_scale;

    std::size_t size() const noexcept { return static_cast<std::size_t>(core.rows()); }
    double entry(std::size_t i, std::size_t j) const;
    /// Materialized matrix (entries may overflow to inf at huge radii).
    Matrix entries() const;
    /// core normalized to unit diagonal (zero rows stay zero).
    Matrix correlation() const;
    double log_diagonal(std::size_t i) const;
    /// Minimum over maximum eigenvalue of the correlation matrix.
    double conditioning() const;
};

/// Gram matrix of the span elements. `grid` is required for Quadrature.
GramMatrix gram(const SolutionSpan& span, double r, GramMethod method,
                const std::optional<SpaceTimeGrid>& grid = std::nullopt);

/// Gram matrix of arbitrary coefficient vectors (rows of `combos`) over the
/// span's basis, expressed with the same scaling as `gram`.
GramMatrix gram_of_combinations(const SolutionSpan& span, const Matrix& combos, double r, GramMethod method,
                                const std::optional<SpaceTimeGrid>& grid = std::nullopt);

/// Checks symmetry (1e-14 relative) and positive semi-definiteness
/// (min eigenvalue >= -1e-10 max eigenvalue of the correlation matrix).
void check_gram(const GramMatrix& g);

/// int_{Q_R \ Q_r} u^2 = I_u(R) - I_u(r).
double annulus_energy_closed(const SolutionSum& u, double r, double big_r);
double annulus_energy_quadrature(const SampledField& u, double r, double big_r);

} // namespace ancient
