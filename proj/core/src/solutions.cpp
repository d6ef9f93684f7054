#include "ancient/solutions.hpp"
#include "ancient/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ancient {

SeparatedSolution SeparatedSolution::make(double coeff, double alpha, Mode mode) {
    SeparatedSolution u;
    u.coeff = coeff;
    u.alpha = alpha;
    u.rho = alpha * alpha - mode.mu;
    u.mode = std::move(mode);
    return u;
}

void SeparatedSolution::check() const {
    if (rho != alpha * alpha - mode.mu)
        fail(ErrorCategory::Invariant, "SeparatedSolution: stored rho differs from alpha^2 - mu");
}

double SeparatedSolution::value(double t, const SpacePoint& x, const StripDomain& d) const {
    return coeff * std::exp(alpha * x.x0 + rho * t) * mode.value(x, d);
}

std::array<double, 3> SeparatedSolution::gradient(double t, const SpacePoint& x, const StripDomain& d) const {
    const double amp = coeff * std::exp(alpha * x.x0 + rho * t);
    const auto g = mode.gradient(x, d);
    return {alpha * amp * mode.value(x, d), amp * g[0], amp * g[1]};
}

double evaluate(const SeparatedSolution& u, double t, const SpacePoint& x, const StripDomain& d) {
    require(t <= 0.0, "evaluate: ancient solutions are only evaluated at t <= 0");
    return u.value(t, x, d);
}

double evaluate(const SolutionSum& u, double t, const SpacePoint& x, const StripDomain& d) {
    require(t <= 0.0, "evaluate: ancient solutions are only evaluated at t <= 0");
    double s = 0.0;
    for (const auto& term : u) s += term.value(t, x, d);
    return s;
}

SolutionSpan::SolutionSpan(StripDomain domain, std::vector<SeparatedSolution> basis)
    : SolutionSpan(domain, basis, Matrix::Identity(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(basis.size()))) {}

SolutionSpan::SolutionSpan(StripDomain domain, std::vector<SeparatedSolution> basis, Matrix coefficients)
    : domain_(std::move(domain)), basis_(std::move(basis)), coefficients_(std::move(coefficients)) {
    require(!basis_.empty(), "SolutionSpan: basis must be nonempty");
    require(coefficients_.cols() == static_cast<Eigen::Index>(basis_.size()),
            "SolutionSpan: coefficient matrix must have one column per basis solution");
    for (std::size_t i = 0; i < basis_.size(); ++i) {
        basis_[i].check();
        require(static_cast<int>(basis_[i].mode.k.size()) == domain_.n(), "SolutionSpan: mode dimension mismatch");
        for (std::size_t j = 0; j < i; ++j)
            require(!basis_[i].same_shape(basis_[j]), "SolutionSpan: basis entries must be distinct in (alpha, mode)");
    }
    if (coefficients_.rows() > 0) {
        Eigen::JacobiSVD<Matrix> svd(coefficients_);
        const Vector s = svd.singularValues();
        require(s(s.size() - 1) > 1e-10 * s(0) && static_cast<Eigen::Index>(s.size()) == coefficients_.rows(),
                "SolutionSpan: coefficient matrix must have full row rank");
    }
}

std::vector<std::string> SolutionSpan::ids() const {
    std::vector<std::string> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back("u" + std::to_string(i + 1));
    return out;
}

SolutionSum SolutionSpan::element(std::size_t i) const {
    SolutionSum s;
    for (std::size_t j = 0; j < basis_.size(); ++j) {
        const double c = coefficients_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (c == 0.0) continue;
        SeparatedSolution term = basis_[j];
        term.coeff *= c;
        s.push_back(std::move(term));
    }
    return s;
}

double SolutionSpan::evaluate(std::size_t i, double t, const SpacePoint& x) const {
    require(t <= 0.0, "evaluate: ancient solutions are only evaluated at t <= 0");
    return coefficients_.row(static_cast<Eigen::Index>(i)).dot(basis_values(t, x));
}

Vector SolutionSpan::basis_values(double t, const SpacePoint& x) const {
    Vector v(static_cast<Eigen::Index>(basis_.size()));
    for (std::size_t j = 0; j < basis_.size(); ++j) v(static_cast<Eigen::Index>(j)) = basis_[j].value(t, x, domain_);
    return v;
}

SolutionSpan SolutionSpan::scaled(double factor) const {
    return SolutionSpan(domain_, basis_, coefficients_ * factor);
}

GrowthClass classify_growth(const SeparatedSolution& u) {
    GrowthClass g;
    if (u.rho >= 0.0) {
        g.kind = GrowthClass::Kind::EdMember;
        g.d_min = std::abs(u.alpha);
        g.constant = std::abs(u.coeff) * u.mode.sup();
    } else {
        // e^{rho t} = e^{|rho||t|} outgrows e^{d |t|^{1/2}} for every d.
        g.kind = GrowthClass::Kind::NotAncientBounded;
    }
    return g;
}

double growth_witness(const SolutionSum& u) {
    double c = 0.0;
    for (const auto& term : u) {
        const GrowthClass g = classify_growth(term);
        require(g.kind == GrowthClass::Kind::EdMember, "growth_witness: every term must be an E_d member");
        c += g.constant;
    }
    return c;
}

namespace {

// Values of u on every node of `grid`, time-major then x0 then cross axes.
std::vector<double> sample(const SolutionSum& u, const SpaceTimeGrid& grid) {
    const StripDomain& d = grid.domain();
    const int n1 = grid.n_cross(0);
    const int n2 = d.n() == 2 ? grid.n_cross(1) : 1;
    std::vector<double> v(static_cast<std::size_t>(grid.nt()) * grid.spatial_size());
    std::size_t idx = 0;
    for (int k = 0; k < grid.nt(); ++k)
        for (int i = 0; i < grid.n0(); ++i)
            for (int j = 0; j < n1; ++j)
                for (int l = 0; l < n2; ++l) {
                    SpacePoint x;
                    x.x0 = grid.x0(i);
                    x.cross[0] = grid.cross(0, j);
                    if (d.n() == 2) x.cross[1] = grid.cross(1, l);
                    double s = 0.0;
                    for (const auto& term : u) s += term.value(grid.time(k), x, d);
                    v[idx++] = s;
                }
    return v;
}

} // namespace

double verify_pde_residual(const SolutionSum& u, const SpaceTimeGrid& grid) {
    const StripDomain& d = grid.domain();
    const int n0 = grid.n0();
    const int n1 = grid.n_cross(0);
    const int n2 = d.n() == 2 ? grid.n_cross(1) : 1;
    const auto v = sample(u, grid);
    const std::size_t level = grid.spatial_size();
    const auto at = [&](int k, int i, int j, int l) {
        return v[static_cast<std::size_t>(k) * level + (static_cast<std::size_t>(i) * n1 + j) * n2 + l];
    };
    const double tau = grid.tau();
    const double h0 = grid.h0();
    const double h1 = grid.h(0);
    const double h2 = d.n() == 2 ? grid.h(1) : 1.0;

    double worst = 0.0;
    const int l_lo = d.n() == 2 ? 1 : 0;
    const int l_hi = d.n() == 2 ? n2 - 1 : 1;
    for (int k = 1; k < grid.nt(); ++k)
        for (int i = 1; i < n0 - 1; ++i)
            for (int j = 1; j < n1 - 1; ++j)
                for (int l = l_lo; l < l_hi; ++l) {
                    const double c = at(k, i, j, l);
                    double lap = (at(k, i + 1, j, l) - 2.0 * c + at(k, i - 1, j, l)) / (h0 * h0) +
                                 (at(k, i, j + 1, l) - 2.0 * c + at(k, i, j - 1, l)) / (h1 * h1);
                    if (d.n() == 2) lap += (at(k, i, j, l + 1) - 2.0 * c + at(k, i, j, l - 1)) / (h2 * h2);
                    const double res = (c - at(k - 1, i, j, l)) / tau - lap;
                    worst = std::max(worst, std::abs(res));
                }
    return worst;
}

ResidualStudy pde_residual_study(const SolutionSum& u, const SpaceTimeGrid& grid) {
    ResidualStudy s;
    s.coarse = verify_pde_residual(u, grid);
    s.fine = verify_pde_residual(u, grid.refined(2, 4));
    if (s.fine > 0.0) {
        s.ratio = s.coarse / s.fine;
        s.order = std::log2(s.ratio);
    }
    return s;
}

SolutionSpan build_continuum_family(const StripDomain& domain, double d, int count) {
    const double a0 = std::sqrt(domain.first_eigenvalue());
    require(d > a0, "build_continuum_family: d must exceed sqrt(mu_1), otherwise the E_d probe set is empty");
    require(count >= 2, "build_continuum_family: need at least 2 solutions");
    const Mode first = make_mode(domain, std::vector<int>(static_cast<std::size_t>(domain.n()), 1));
    std::vector<SeparatedSolution> basis;
    for (int i = 0; i < count; ++i) {
        const double alpha = (i == count - 1) ? d : a0 + (d - a0) * i / (count - 1);
        basis.push_back(SeparatedSolution::make(1.0, alpha, first));
    }
    return SolutionSpan(domain, std::move(basis));
}

PolynomialBoundProbe probe_polynomial_bound(const SolutionSum& u, const StripDomain& domain, double d,
                                            const std::vector<double>& radii, int samples_per_axis) {
    require(!radii.empty(), "probe_polynomial_bound: need at least one radius");
    require(samples_per_axis >= 3, "probe_polynomial_bound: need at least 3 samples per axis");
    PolynomialBoundProbe probe;

    const int s = samples_per_axis;
    const auto scan = [&](double r, auto&& visit) {
        for (int a = 0; a < s; ++a) {
            const double t = -r * r * a / (s - 1);
            for (int b = 0; b < s; ++b) {
                SpacePoint x;
                x.x0 = -r + 2.0 * r * b / (s - 1);
                for (int c = 1; c < s - 1; ++c) {
                    x.cross[0] = domain.length(0) * c / (s - 1);
                    const int lim = domain.n() == 2 ? s - 1 : 2;
                    for (int e = 1; e < lim; ++e) {
                        if (domain.n() == 2) x.cross[1] = domain.length(1) * e / (s - 1);
                        const double norm = std::sqrt(x.x0 * x.x0 + x.cross[0] * x.cross[0] + x.cross[1] * x.cross[1]);
                        const double envelope = std::pow(norm + std::sqrt(-t) + 1.0, d);
                        visit(t, x, std::abs(evaluate(u, t, x, domain)) / envelope);
                    }
                }
            }
        }
    };

    double c = 0.0;
    scan(radii.front(), [&](double, const SpacePoint&, double q) { c = std::max(c, q); });
    probe.fitted_constant = c;
    if (c == 0.0) return probe;

    for (std::size_t i = 1; i < radii.size() && !probe.violated; ++i) {
        double best = 0.0;
        scan(radii[i], [&](double t, const SpacePoint& x, double q) {
            if (q / c > best) {
                best = q / c;
                if (best > 1.0) {
                    probe.t = t;
                    probe.x = x;
                }
            }
        });
        if (best > 1.0) {
            probe.violated = true;
            probe.radius = radii[i];
            probe.ratio = best;
        }
    }
    return probe;
}

} // namespace ancient
