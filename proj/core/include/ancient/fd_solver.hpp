#pragma once

#include "ancient/field.hpp"
#include "ancient/geometry.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ancient {

/// Coefficients of L u = d_i(a^{ij} d_j u) + b^i d_i u + c u at one point.
/// Only the leading (n+1) x (n+1) block is meaningful.
struct CoefficientSample {
    std::array<std::array<double, 3>, 3> a{};
    std::array<double, 3> b{};
    double c = 0.0;
};

struct OperatorCoefficients {
    std::string name;
    std::function<CoefficientSample(const SpacePoint&)> at;
    double lambda_ell = 1.0; ///< ellipticity lower bound
    double Lambda_ell = 1.0; ///< bound on |a^{ij}|
    double eps = 0.0;        ///< smallness budget: |b| <= sqrt(eps), c <= eps
};

/// a = I, b = 0, c = 0.
OperatorCoefficients laplacian_operator();

/// Named presets: "laplacian"; "varying" a = (1 + 0.1 sin x0) I;
/// "anisotropic" a = [[1.2, 0.1], [0.1, 0.9]] with b = (0.1, 0) and c = -0.05.
/// The bounds are set to the tightest values the preset satisfies.
OperatorCoefficients operator_preset(const std::string& name);
std::vector<std::string> operator_preset_names();

struct CoefficientViolation {
    std::size_t node = 0;
    SpacePoint x;
    std::string reason;
};

struct CoefficientReport {
    bool pass = true;
    double min_rayleigh = 0.0;
    double max_abs_a = 0.0;
    double max_b = 0.0;
    double max_c = 0.0;
    std::size_t nodes_checked = 0;
    std::size_t violating_nodes = 0;
    std::optional<CoefficientViolation> first_violation;
};

/// Samples the coefficients at every spatial node of `grid`. The Rayleigh
/// quotient of a is minimized over 26 unit directions.
CoefficientReport validate_coefficients(const OperatorCoefficients& coeffs, const SpaceTimeGrid& grid);

/// The 26 sampled unit directions in R^dim (dim = 2 or 3).
std::vector<std::array<double, 3>> rayleigh_directions(int dim);

enum class TimeScheme { ImplicitEuler, CrankNicolson };
std::string to_string(TimeScheme s);
TimeScheme time_scheme_from_string(const std::string& s);

/// Discrete solution of (d_t - L) u = 0 on the grid window, zero on the
/// lateral boundary and at x0 = +-X.
struct SolutionField {
    SampledField field;
    std::uint64_t seed = 0;
    TimeScheme scheme = TimeScheme::ImplicitEuler;
    std::string operator_name;
    double max_relative_residual = 0.0;

    const SpaceTimeGrid& grid() const noexcept { return field.grid; }
};

/// Advances `initial` (values on the spatial nodes at t = -T, layout
/// (x0, x1)) to t = 0. The conservative discretization of L is assembled once,
/// factored as a banded matrix and reused for every step; each solve is
/// checked to residual <= 1e-12 relative.
SolutionField evolve(const OperatorCoefficients& coeffs, const std::vector<double>& initial,
                     const SpaceTimeGrid& grid, TimeScheme scheme = TimeScheme::ImplicitEuler,
                     std::uint64_t seed = 0);

/// Seeded smooth bump vanishing on the lateral boundary and at x0 = +-X:
/// A exp(-(x0-c)^2/w^2) (sin(pi x1/L) + b2 sin(2 pi x1/L) + b3 sin(3 pi x1/L)).
std::vector<double> seeded_bump(const SpaceTimeGrid& grid, std::uint64_t seed);

/// Gradient components (d/dx0, d/dx1[, d/dx2]): centered differences in the
/// interior and second-order one-sided differences at the boundary.
std::vector<SampledField> discrete_gradient(const SampledField& field);

/// Flat little-endian layout: u64 nt, u64 n0, u64 n1, f64 tau, f64 h0, f64 h1,
/// f64 T, f64 X, u64 seed, then nt*n0*n1 f64 values row-major (t, x0, x1).
void write_field_binary(const std::string& path, const SolutionField& f);
SolutionField read_field_binary(const std::string& path, const StripDomain& domain);

} // namespace ancient
