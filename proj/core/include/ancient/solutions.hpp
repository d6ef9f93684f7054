#pragma once

#include "ancient/geometry.hpp"
#include "ancient/linalg.hpp"

#include <string>
#include <vector>

namespace ancient {

/// u(t,x) = coeff * e^{alpha x0} * e^{rho t} * psi_k(x'), rho = alpha^2 - mu_k.
///
/// The temporal rate is called rho (not lambda) because lambda is taken by the
/// ellipticity bound of the operator.
struct SeparatedSolution {
    double coeff = 1.0;
    double alpha = 0.0;
    Mode mode;
    double rho = 0.0;

    static SeparatedSolution make(double coeff, double alpha, Mode mode);

    /// Throws unless rho == alpha^2 - mu exactly as stored.
    void check() const;
    bool same_shape(const SeparatedSolution& other) const { return alpha == other.alpha && mode.k == other.mode.k; }

    double value(double t, const SpacePoint& x, const StripDomain& d) const;
    /// Full spatial gradient (d/dx0, d/dx1, d/dx2).
    std::array<double, 3> gradient(double t, const SpacePoint& x, const StripDomain& d) const;
};

/// A finite linear combination of separated solutions (each term carries its
/// own coefficient).
using SolutionSum = std::vector<SeparatedSolution>;

/// Rejects t > 0; zero on the lateral boundary by construction.
double evaluate(const SeparatedSolution& u, double t, const SpacePoint& x, const StripDomain& d);
double evaluate(const SolutionSum& u, double t, const SpacePoint& x, const StripDomain& d);

/// span{ sum_j coefficients(i,j) basis[j] : i }.
class SolutionSpan {
public:
    SolutionSpan(StripDomain domain, std::vector<SeparatedSolution> basis);
    SolutionSpan(StripDomain domain, std::vector<SeparatedSolution> basis, Matrix coefficients);

    const StripDomain& domain() const noexcept { return domain_; }
    const std::vector<SeparatedSolution>& basis() const noexcept { return basis_; }
    const Matrix& coefficients() const noexcept { return coefficients_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(coefficients_.rows()); }
    std::vector<std::string> ids() const;

    /// Element i written out as a sum of scaled basis solutions.
    SolutionSum element(std::size_t i) const;
    double evaluate(std::size_t i, double t, const SpacePoint& x) const;
    /// Values of every basis solution at (t,x).
    Vector basis_values(double t, const SpacePoint& x) const;

    /// All elements multiplied by `factor`.
    SolutionSpan scaled(double factor) const;

private:
    StripDomain domain_;
    std::vector<SeparatedSolution> basis_;
    Matrix coefficients_;
};

struct GrowthClass {
    enum class Kind { EdMember, NotAncientBounded };
    Kind kind = Kind::NotAncientBounded;
    double d_min = 0.0;
    double constant = 0.0;

    bool member_of(double d) const { return kind == Kind::EdMember && d_min <= d; }
};

/// E_d membership holds iff rho >= 0; then d_min = |alpha| and the witness
/// constant is |coeff| sup|psi_k|.
GrowthClass classify_growth(const SeparatedSolution& u);

/// Witness constant C with |u| <= C e^{d(|x|+|t|^{1/2})} for d >= max d_min,
/// i.e. sum |coeff_j| sup|psi_j| (requires every term to be an E_d member).
double growth_witness(const SolutionSum& u);

/// Max |(u^n - u^{n-1})/tau - Delta_h u^n| over interior nodes of `grid`.
double verify_pde_residual(const SolutionSum& u, const SpaceTimeGrid& grid);

struct ResidualStudy {
    double coarse = 0.0;
    double fine = 0.0;
    double ratio = 0.0;
    /// log2(coarse/fine) after halving h and quartering tau.
    double order = 0.0;
};

ResidualStudy pde_residual_study(const SolutionSum& u, const SpaceTimeGrid& grid);

/// N mode-1 solutions with alpha equally spaced on [sqrt(mu_1), d], unit coefficient.
SolutionSpan build_continuum_family(const StripDomain& domain, double d, int count);

/// Outcome of testing |u| <= C (|x| + |t|^{1/2} + 1)^d on Q_R for a ladder of
/// radii, with C fitted on the smallest radius.
struct PolynomialBoundProbe {
    bool violated = false;
    double fitted_constant = 0.0;
    double radius = 0.0;
    double t = 0.0;
    SpacePoint x;
    double ratio = 0.0; ///< |u| / (C (|x|+|t|^{1/2}+1)^d) at the violating sample
};

PolynomialBoundProbe probe_polynomial_bound(const SolutionSum& u, const StripDomain& domain, double d,
                                            const std::vector<double>& radii, int samples_per_axis = 17);

} // namespace ancient
