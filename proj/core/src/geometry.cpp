#include "ancient/geometry.hpp"
#include "ancient/error.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ancient {

namespace {

bool integer_multiple(double extent, double step, int& count) {
    const double q = extent / step;
    const double rounded = std::round(q);
    if (rounded < 1.0 || std::abs(q - rounded) > 1e-9 * std::max(1.0, rounded)) return false;
    count = static_cast<int>(rounded);
    return true;
}

} // namespace

StripDomain::StripDomain(std::vector<double> lengths, double truncation)
    : lengths_(std::move(lengths)), truncation_(truncation), volume_(1.0) {
    require(lengths_.size() == 1 || lengths_.size() == 2, "StripDomain: cross-section dimension must be 1 or 2");
    for (double l : lengths_) {
        require(l > 0.0 && std::isfinite(l), "StripDomain: cross-section lengths must be positive");
        volume_ *= l;
    }
    require(truncation_ > 0.0 && std::isfinite(truncation_), "StripDomain: truncation X must be positive");
}

double StripDomain::first_eigenvalue() const noexcept {
    double mu = 0.0;
    for (double l : lengths_) mu += (M_PI / l) * (M_PI / l);
    return mu;
}

bool StripDomain::on_lateral_boundary(const SpacePoint& x, double tol) const {
    for (int i = 0; i < n(); ++i) {
        const double c = x.cross[static_cast<std::size_t>(i)];
        if (std::abs(c) <= tol || std::abs(c - length(i)) <= tol) return true;
    }
    return false;
}

bool StripDomain::inside(const SpacePoint& x) const {
    for (int i = 0; i < n(); ++i) {
        const double c = x.cross[static_cast<std::size_t>(i)];
        if (!(c > 0.0 && c < length(i))) return false;
    }
    return true;
}

ParabolicCylinder::ParabolicCylinder(double radius) : r(radius) {
    require(r > 0.0, "ParabolicCylinder: radius must be positive");
}

bool ParabolicCylinder::contains(double t, const SpacePoint& x, const StripDomain& d) const {
    return t > -r * r && t <= 0.0 && std::abs(x.x0) < r && d.inside(x);
}

ParabolicBall::ParabolicBall(double time, SpacePoint x, double radius) : t(time), center(x), r(radius) {
    require(r > 0.0, "ParabolicBall: radius must be positive");
}

double ParabolicBall::volume(int n) const noexcept {
    // |B_r| in R^{n+1}: pi r^2 for n = 1, 4/3 pi r^3 for n = 2.
    const double ball = n == 1 ? M_PI * r * r : 4.0 / 3.0 * M_PI * r * r * r;
    return r * r * ball;
}

SpaceTimeGrid::SpaceTimeGrid(const StripDomain& domain, double time_extent, int time_steps, int cells_x0,
                             std::array<int, 2> cells_cross)
    : domain_(domain), time_extent_(time_extent), time_steps_(time_steps), cells_x0_(cells_x0),
      cells_cross_(cells_cross) {
    require(time_extent_ > 0.0, "SpaceTimeGrid: time extent T must be positive");
    require(time_steps_ >= 2, "SpaceTimeGrid: need at least 3 time nodes");
    require(cells_x0_ >= 2, "SpaceTimeGrid: need at least 3 nodes along x0");
    for (int i = 0; i < domain_.n(); ++i)
        require(cells_cross_[static_cast<std::size_t>(i)] >= 2, "SpaceTimeGrid: need at least 3 nodes per cross-section axis");
    if (domain_.n() == 1) cells_cross_[1] = 0;
}

SpaceTimeGrid SpaceTimeGrid::from_spacing(const StripDomain& domain, double time_extent, double tau, double h0,
                                          double h) {
    require(tau > 0.0 && h0 > 0.0 && h > 0.0, "SpaceTimeGrid: spacings must be positive");
    int steps = 0, c0 = 0;
    std::array<int, 2> cc{0, 0};
    if (!integer_multiple(time_extent, tau, steps))
        fail(ErrorCategory::Precondition, "SpaceTimeGrid: T is not an integer multiple of tau");
    if (!integer_multiple(2.0 * domain.truncation(), h0, c0))
        fail(ErrorCategory::Precondition, "SpaceTimeGrid: 2X is not an integer multiple of h0");
    for (int i = 0; i < domain.n(); ++i)
        if (!integer_multiple(domain.length(i), h, cc[static_cast<std::size_t>(i)]))
            fail(ErrorCategory::Precondition, "SpaceTimeGrid: cross-section length is not an integer multiple of h");
    return SpaceTimeGrid(domain, time_extent, steps, c0, cc);
}

std::size_t SpaceTimeGrid::spatial_size() const {
    std::size_t s = static_cast<std::size_t>(n0());
    for (int i = 0; i < domain_.n(); ++i) s *= static_cast<std::size_t>(n_cross(i));
    return s;
}

SpaceTimeGrid SpaceTimeGrid::refined(int space, int time) const {
    std::array<int, 2> cc = cells_cross_;
    for (auto& c : cc) c *= space;
    return SpaceTimeGrid(domain_, time_extent_, time_steps_ * time, cells_x0_ * space, cc);
}

std::string SpaceTimeGrid::describe() const {
    std::ostringstream os;
    os.precision(12);
    os << "T=" << time_extent_ << " steps=" << time_steps_ << " X=" << domain_.truncation() << " cells_x0=" << cells_x0_;
    for (int i = 0; i < domain_.n(); ++i) os << " cells_x" << (i + 1) << "=" << cells_cross_[static_cast<std::size_t>(i)];
    return os.str();
}

SnappedCylinder snap_cylinder(const SpaceTimeGrid& grid, double r) {
    require(r > 0.0, "snap_cylinder: radius must be positive");
    if (grid.cells_x0() % 2 != 0)
        fail(ErrorCategory::Precondition, "snap_cylinder: x0 = 0 must be a grid node (even cells_x0)");
    SnappedCylinder s;
    s.requested_r = r;
    s.half_cells = static_cast<int>(std::lround(r / grid.h0()));
    if (s.half_cells < 1) fail(ErrorCategory::Precondition, "snap_cylinder: radius below one grid cell");
    if (2 * s.half_cells > grid.cells_x0())
        fail(ErrorCategory::Precondition, "window-too-small: snapped radius exceeds truncation X");
    s.r = s.half_cells * grid.h0();
    s.time_steps = static_cast<int>(std::lround(s.r * s.r / grid.tau()));
    if (s.time_steps < 1) fail(ErrorCategory::Precondition, "snap_cylinder: time extent below one step");
    if (s.time_steps > grid.time_steps())
        fail(ErrorCategory::Precondition, "window-too-small: r^2 exceeds the time window T");
    s.time_extent = s.time_steps * grid.tau();
    return s;
}

double Mode::value(const SpacePoint& x, const StripDomain& d) const {
    double v = normalization;
    for (std::size_t i = 0; i < k.size(); ++i)
        v *= std::sin(k[i] * M_PI * x.cross[i] / d.length(static_cast<int>(i)));
    return v;
}

std::array<double, 2> Mode::gradient(const SpacePoint& x, const StripDomain& d) const {
    std::array<double, 2> g{0.0, 0.0};
    for (std::size_t i = 0; i < k.size(); ++i) {
        double gi = normalization;
        for (std::size_t j = 0; j < k.size(); ++j) {
            const double w = k[j] * M_PI / d.length(static_cast<int>(j));
            gi *= (i == j) ? w * std::cos(w * x.cross[j]) : std::sin(w * x.cross[j]);
        }
        g[i] = gi;
    }
    return g;
}

std::string Mode::label() const {
    std::string s;
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (i) s += ';';
        s += std::to_string(k[i]);
    }
    return s;
}

Mode make_mode(const StripDomain& domain, std::vector<int> k) {
    require(static_cast<int>(k.size()) == domain.n(), "make_mode: multi-index size must equal cross-section dimension");
    Mode m;
    m.normalization = 1.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        require(k[i] >= 1, "make_mode: multi-index entries must be positive");
        const double l = domain.length(static_cast<int>(i));
        const double w = k[i] * M_PI / l;
        m.mu += w * w;
        m.normalization *= std::sqrt(2.0 / l);
    }
    m.k = std::move(k);
    return m;
}

std::vector<Mode> box_eigenpairs(const StripDomain& domain, double mu_max) {
    require(mu_max > 0.0, "box_eigenpairs: mu_max must be positive");
    std::vector<Mode> out;
    const auto kmax = [&](int axis) { return static_cast<int>(std::floor(std::sqrt(mu_max) * domain.length(axis) / M_PI)); };
    if (domain.n() == 1) {
        for (int k1 = 1; k1 <= kmax(0); ++k1) {
            Mode m = make_mode(domain, {k1});
            if (m.mu <= mu_max) out.push_back(std::move(m));
        }
    } else {
        for (int k1 = 1; k1 <= kmax(0); ++k1)
            for (int k2 = 1; k2 <= kmax(1); ++k2) {
                Mode m = make_mode(domain, {k1, k2});
                if (m.mu <= mu_max) out.push_back(std::move(m));
            }
    }
    std::stable_sort(out.begin(), out.end(), [](const Mode& a, const Mode& b) {
        if (a.mu != b.mu) return a.mu < b.mu;
        return a.k < b.k;
    });
    return out;
}

std::vector<DiscreteEigenpair> fd_eigenpairs_1d(double length, int nodes, int count) {
    require(length > 0.0, "fd_eigenpairs_1d: length must be positive");
    require(nodes >= 3, "fd_eigenpairs_1d: need at least 3 nodes");
    const int m = nodes - 2;
    const double h = length / (nodes - 1);
    const int want = (count <= 0 || count > m) ? m : count;

    std::vector<double> diag(static_cast<std::size_t>(m), 2.0 / (h * h));
    std::vector<double> off(static_cast<std::size_t>(std::max(m - 1, 1)), -1.0 / (h * h));
    std::vector<double> w(static_cast<std::size_t>(m));
    std::vector<double> z(static_cast<std::size_t>(m) * static_cast<std::size_t>(want));
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(want));
    lapack_int found = 0;

    const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', m, diag.data(), off.data(), 0.0, 0.0, 1,
                                           want, 0.0, &found, w.data(), z.data(), m, support.data());
    if (info != 0 || found != want)
        fail(ErrorCategory::Numerical, "fd_eigenpairs_1d: tridiagonal eigensolver failed (info=" + std::to_string(info) + ")");

    std::vector<DiscreteEigenpair> out(static_cast<std::size_t>(want));
    for (int j = 0; j < want; ++j) {
        auto& p = out[static_cast<std::size_t>(j)];
        p.mu = w[static_cast<std::size_t>(j)];
        p.vector.assign(z.begin() + static_cast<std::ptrdiff_t>(j) * m, z.begin() + static_cast<std::ptrdiff_t>(j + 1) * m);
        // sign convention: first nonzero entry positive
        for (double v : p.vector) {
            if (std::abs(v) > 1e-14) {
                if (v < 0) for (double& x : p.vector) x = -x;
                break;
            }
        }
    }
    return out;
}

std::size_t weyl_count(const StripDomain& domain, double d) {
    require(d > 0.0, "weyl_count: d must be positive");
    return box_eigenpairs(domain, d * d).size();
}

} // namespace ancient
