#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace ancient {

/// A point of the strip: x0 runs along the unbounded axis, `cross` holds the
/// cross-section coordinates (only the first `n` entries are meaningful).
struct SpacePoint {
    double x0 = 0.0;
    std::array<double, 2> cross{};
};

/// The strip R x Omega0 with a box cross-section (0,L_1) x ... x (0,L_n),
/// truncated to |x0| <= X for grid-based computations.
class StripDomain {
public:
    StripDomain(std::vector<double> lengths, double truncation);

    int n() const noexcept { return static_cast<int>(lengths_.size()); }
    const std::vector<double>& lengths() const noexcept { return lengths_; }
    double length(int axis) const { return lengths_.at(static_cast<std::size_t>(axis)); }
    double truncation() const noexcept { return truncation_; }
    double volume() const noexcept { return volume_; }
    /// Smallest Dirichlet eigenvalue of the cross-section, sum_i (pi/L_i)^2.
    double first_eigenvalue() const noexcept;
    bool on_lateral_boundary(const SpacePoint& x, double tol = 0.0) const;
    bool inside(const SpacePoint& x) const;

private:
    std::vector<double> lengths_;
    double truncation_;
    double volume_;
};

/// Q_r = (-r^2, 0] x (-r, r) x Omega0.
struct ParabolicCylinder {
    double r;

    explicit ParabolicCylinder(double radius);
    double time_extent() const noexcept { return r * r; }
    double volume(const StripDomain& d) const noexcept { return r * r * 2.0 * r * d.volume(); }
    bool contains(double t, const SpacePoint& x, const StripDomain& d) const;
};

/// P_r(t,x) = (t - r^2, t] x B_r(x), B_r a Euclidean ball in R^{n+1}.
struct ParabolicBall {
    double t;
    SpacePoint center;
    double r;

    ParabolicBall(double time, SpacePoint x, double radius);
    /// Lebesgue measure r^2 * |B_r| in R x R^{n+1}.
    double volume(int n) const noexcept;
};

/// Tensor-product space-time grid on (-T, 0] x [-X, X] x Omega0.
/// Node counts, not spacings, are the primary data so that every node is
/// exactly representable; spacings follow from the extents.
class SpaceTimeGrid {
public:
    SpaceTimeGrid(const StripDomain& domain, double time_extent, int time_steps, int cells_x0,
                  std::array<int, 2> cells_cross);

    /// Builds a grid from target spacings; each extent must be an integer
    /// multiple of its spacing to within 1e-9 relative.
    static SpaceTimeGrid from_spacing(const StripDomain& domain, double time_extent, double tau, double h0,
                                      double h);

    const StripDomain& domain() const noexcept { return domain_; }
    double time_extent() const noexcept { return time_extent_; }
    double tau() const noexcept { return time_extent_ / time_steps_; }
    double h0() const noexcept { return 2.0 * domain_.truncation() / cells_x0_; }
    double h(int axis) const { return domain_.length(axis) / cells_cross_.at(static_cast<std::size_t>(axis)); }

    int time_steps() const noexcept { return time_steps_; }
    int cells_x0() const noexcept { return cells_x0_; }
    int cells_cross(int axis) const { return cells_cross_.at(static_cast<std::size_t>(axis)); }

    int nt() const noexcept { return time_steps_ + 1; }
    int n0() const noexcept { return cells_x0_ + 1; }
    int n_cross(int axis) const { return cells_cross(axis) + 1; }
    /// Number of spatial nodes per time level.
    std::size_t spatial_size() const;

    double time(int k) const noexcept { return -time_extent_ + k * tau(); }
    double x0(int i) const noexcept { return -domain_.truncation() + i * h0(); }
    double cross(int axis, int j) const { return j * h(axis); }

    /// Same extents with every cell count multiplied by `space` and the time
    /// step count by `time`.
    SpaceTimeGrid refined(int space, int time) const;

    std::string describe() const;

private:
    StripDomain domain_;
    double time_extent_;
    int time_steps_;
    int cells_x0_;
    std::array<int, 2> cells_cross_;
};

/// A cylinder radius snapped to grid nodes: the half-width is the nearest
/// multiple of h0 and the time extent the nearest multiple of tau to the
/// squared snapped half-width.
struct SnappedCylinder {
    double requested_r = 0.0;
    double r = 0.0;
    int half_cells = 0;
    double time_extent = 0.0;
    int time_steps = 0;
};

/// Snaps Q_r onto `grid`; throws when the snapped cylinder leaves the window.
SnappedCylinder snap_cylinder(const SpaceTimeGrid& grid, double r);

/// Dirichlet eigenfunction of the box: psi_k(x') = prod_i sqrt(2/L_i) sin(k_i pi x_i / L_i).
struct Mode {
    std::vector<int> k;
    double mu = 0.0;
    double normalization = 0.0;

    double value(const SpacePoint& x, const StripDomain& d) const;
    /// Gradient in the cross-section coordinates.
    std::array<double, 2> gradient(const SpacePoint& x, const StripDomain& d) const;
    /// sup |psi_k| over the cross-section.
    double sup() const noexcept { return normalization; }
    std::string label() const;
};

Mode make_mode(const StripDomain& domain, std::vector<int> k);

/// All modes with mu <= mu_max, ascending in mu, ties broken lexicographically.
std::vector<Mode> box_eigenpairs(const StripDomain& domain, double mu_max);

struct DiscreteEigenpair {
    double mu = 0.0;
    std::vector<double> vector; ///< interior nodes, unit Euclidean norm
};

/// Eigenpairs of the second-difference Dirichlet matrix on (0,L) with `nodes`
/// grid points (boundary included), ascending. At most `count` pairs are
/// returned (0 = all).
std::vector<DiscreteEigenpair> fd_eigenpairs_1d(double length, int nodes, int count = 0);

/// Number of cross-section modes with mu <= d^2.
std::size_t weyl_count(const StripDomain& domain, double d);

} // namespace ancient
