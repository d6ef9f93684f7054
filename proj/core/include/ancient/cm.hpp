#pragma once

#include "ancient/estimates.hpp"
#include "ancient/quadrature.hpp"
#include "ancient/solutions.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ancient {

/// f_i sampled on a list of radii. `values` may overflow to inf at large
/// radii; `log_values` stays finite (-inf marks f = 0).
struct MonotoneTable {
    double delta = 0.0; ///< > 0 when radii[m] = m delta
    std::vector<double> radii;
    Matrix values;     ///< k x radii.size()
    Matrix log_values; ///< k x radii.size()
    double d_growth = 0.0;
    std::vector<double> C_growth;
    std::optional<GramMethod> method;
    std::vector<std::string> ids;
    /// Per radius: row i holds the coefficients of w_{i,r} over the span elements.
    std::vector<Matrix> projections;
    /// log I_{u_i}(r) per radius.
    Matrix log_energies;
    /// Gram matrices behind the table; grams[m - grams_offset] belongs to radii[m].
    std::vector<GramMatrix> grams;
    std::size_t grams_offset = 0;
    double d = 0.0; ///< span growth exponent, set by attach_growth_bounds

    std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t count() const noexcept { return radii.size(); }
    bool is_ladder() const noexcept { return delta > 0.0; }
    const GramMatrix& gram_at(std::size_t m) const { return grams.at(m - grams_offset); }

    /// Synthetic ladder table; log values are taken from `values`.
    static MonotoneTable from_values(double delta, const Matrix& values, double d_growth,
                                     std::vector<double> C_growth = {});
};

/// f_i from the pivots of each Gram matrix. All Gram matrices must share one
/// method and one basis; each is PSD-checked.
MonotoneTable compute_f(const std::vector<GramMatrix>& grams, const std::vector<double>& radii);
MonotoneTable compute_f(const SolutionSpan& span, const std::vector<double>& radii, GramMethod method,
                        const std::optional<SpaceTimeGrid>& grid = std::nullopt);
/// Radii m delta for m = 0..M (radius 0 gives f = 0).
MonotoneTable compute_f_ladder(const SolutionSpan& span, double delta, int M, GramMethod method,
                               const std::optional<SpaceTimeGrid>& grid = std::nullopt);

/// Fills d_growth = 4d + 1 and C_growth from the E_d witnesses of the span,
/// d = the smallest admissible exponent of the span elements.
void attach_growth_bounds(MonotoneTable& table, const SolutionSpan& span);

/// Coefficients lambda_{ij}(r) (row i, column j < i) of the projection at radius index m.
Matrix projection_lambdas(const MonotoneTable& table, std::size_t m);

struct PropertyViolation {
    std::string property;
    std::size_t function = 0;
    std::size_t index = 0;
    std::string detail;
};

struct FPropertiesReport {
    bool bound_ok = true;        ///< (1): f_i(r) <= C_i e^{(4d+1) r}
    bool energy_bound_ok = true; ///< I_{u_i}(r) <= C_w^2 vol(Q_r) e^{4dr}
    bool projection_ok = true;   ///< (2): f_i(s) <= I_{w_{i,r}}(s)
    bool monotone_ok = true;     ///< (3): non-negative, non-decreasing, eventually positive
    std::size_t pairs_checked = 0;
    double worst_bound_log_margin = 0.0;
    std::vector<PropertyViolation> violations;

    bool pass() const noexcept { return bound_ok && energy_bound_ok && projection_ok && monotone_ok; }
};

/// Checks the three properties on `table`. `d` and `C_list` (per function,
/// the E_d witness constants) come from the span unless given; (2) is
/// checked on every (s, r) pair of the table's radii.
FPropertiesReport verify_f_properties(const MonotoneTable& table, const SolutionSpan& span,
                                      std::optional<double> d = std::nullopt,
                                      const std::vector<double>& C_list = {});
/// Only (3), for synthetic tables.
FPropertiesReport verify_monotone(const MonotoneTable& table);

/// f_i((m+1) delta) <= sigma f_i(m delta) on the stored table.
bool ratio_holds(const MonotoneTable& table, std::size_t i, std::size_t m, double sigma);
/// Sort key f((m+1)delta)/f(m delta): +inf when only f(m delta) = 0, 1 when both are 0.
double ratio(const MonotoneTable& table, std::size_t i, std::size_t m);

/// exp(k/(k-ell+1) delta d).
double selection_threshold(std::size_t k, std::size_t ell, double delta, double d);

struct SelectionReport {
    std::size_t k = 0;
    std::size_t ell = 0;
    double sigma = 0.0;
    double threshold = 0.0;
    double delta = 0.0;
    int m0 = 0;
    int M = 0;
    std::vector<int> m_list;
    std::vector<std::vector<std::size_t>> subsets; ///< one per entry of m_list
    std::vector<std::size_t> subset;               ///< the subset at m_list.front()
    Matrix ratios;                                 ///< k x (M - m0), column j is m = m0 + j
};

/// Scans m = m0..M-1 and keeps every m where at least ell ratios satisfy the
/// inequality; the subset is the ell smallest ratios (ties by index).
SelectionReport select_scales(const MonotoneTable& table, std::size_t ell, double sigma, int m0, int M);

struct SimultaneousBasis {
    Matrix V;      ///< columns: V^T A V = I, V^T B V = diag(values)
    Vector values; ///< descending
    double residual_a = 0.0;
    double residual_b = 0.0;
};

SimultaneousBasis simultaneous_diagonalize(const Matrix& A, const Matrix& B);

/// 1/2 e^{(8d+2)delta}.
double good_basis_sigma(double d, double delta);
/// 1/2 e^{8 + 1/(2d)}, the value written in the dimension argument.
double reference_sigma(double d);

struct GoodBasisOptions {
    GramMethod method = GramMethod::ClosedForm;
    std::optional<SpaceTimeGrid> grid;
    int M = 0;                       ///< 0: ceil(64/delta)
    std::optional<double> d;         ///< default: the span's growth exponent
    std::optional<double> sigma;     ///< default: good_basis_sigma(d, delta)
};

struct GoodBasis {
    std::size_t k = 0; ///< half the span size
    double delta = 0.0;
    double d = 0.0;
    double sigma = 0.0;
    double sigma_reference = 0.0;
    int m0_requested = 0;
    int m0_used = 0;
    int m = 0;
    SelectionReport selection;
    std::vector<std::size_t> subset;
    Matrix W;           ///< k x 2k: normalized w_{alpha_i,(m+1)delta} over the span elements
    Matrix V_all;       ///< k x 2k: all diagonalized directions over the span elements
    Vector values_all;  ///< I_{v}(m delta) of every direction, descending
    std::vector<std::size_t> retained;
    Matrix v;           ///< ell x 2k
    Vector I_small;     ///< I_{v_i}(m delta) of the retained v_i
    std::size_t ell = 0;
    double trace_all = 0.0;
    double trace_retained = 0.0;
    double ratio_sum = 0.0; ///< sum over the subset of f(m delta)/f((m+1) delta)
    double residual_top = 0.0;
    double residual_offdiag = 0.0;
    bool chain_stated = false;    ///< trace_all >= 2 k / sigma
    bool chain_corrected = false; ///< trace_all >= ratio_sum >= k / (2 sigma)
    bool ell_bound = false;       ///< ell >= k / sigma
    bool hard_bound = false;      ///< trace_retained <= ell
    double conditioning_top = 0.0;
    double conditioning_bottom = 0.0;
    std::vector<std::string> notes;
};

GoodBasis good_basis(const SolutionSpan& span, double delta, int m0, const GoodBasisOptions& opt = {});

/// Basis coefficients (over span.basis()) of combinations given over the span elements.
Matrix to_basis_coefficients(const SolutionSpan& span, const Matrix& over_elements);

struct SamplePoint {
    double t = 0.0;
    SpacePoint x;
};

struct KernelTrace {
    std::vector<SamplePoint> points;
    std::vector<double> K;      ///< sum_i v_i^2
    std::vector<double> K_gram; ///< max w^2 over J-unit w, via a mixed basis and its Gram matrix
    double max_relative_defect = 0.0;
};

/// `V` (rows over span elements) should be J_radius-orthonormal. The Gram
/// route mixes V with a seeded random invertible matrix and evaluates
/// e^T G^{-1} e in that basis.
KernelTrace kernel_trace(const SolutionSpan& span, const Matrix& V, double radius, const std::vector<SamplePoint>& points,
                         std::uint64_t seed = 1);

/// max |K(QV) - K(V)| / max K over the points for a seeded orthogonal Q.
double kernel_rotation_defect(const SolutionSpan& span, const Matrix& V, const std::vector<SamplePoint>& points,
                              std::uint64_t seed = 1);

/// Deterministic sample points inside Q_r.
std::vector<SamplePoint> kernel_sample_points(const StripDomain& domain, double r, int count, std::uint64_t seed);

struct TraceBoundReport {
    double a = 0.0;
    double delta = 0.0;
    std::size_t ell = 0;
    double trace = 0.0;      ///< sum of I_{v_i}(a) over the retained v_i, recomputed
    double annulus_kernel = 0.0; ///< V0 int_{a/2}^{a} (a + delta - r)^{-(n+3)} r^2 dr
    double empirical_constant = 0.0; ///< trace delta^{n+2}
    bool hard_bound = false;
    bool pass = false;
};

TraceBoundReport trace_bound_check(const SolutionSpan& span, const GoodBasis& basis, GramMethod method = GramMethod::ClosedForm,
                                   const std::optional<SpaceTimeGrid>& grid = std::nullopt);

struct LadderStep {
    double delta = 0.0;
    bool ok = false;
    std::string error;
    std::size_t ell = 0;
    int m = 0;
    double trace = 0.0;
    double empirical_constant = 0.0;
};

struct DeltaLadder {
    std::vector<LadderStep> steps;
    /// delta-scaling trend: every step ok, trace non-decreasing as delta
    /// decreases, constant finite.
    bool monotone = false;
    /// Stricter: trace delta^{n+2} itself non-increasing as delta decreases.
    bool constant_monotone = false;
    double max_constant = 0.0;
};

/// good_basis + trace_bound_check at each delta (descending).
DeltaLadder delta_ladder(const SolutionSpan& span, const std::vector<double>& deltas, int m0,
                         const GoodBasisOptions& opt = {});

/// 2k probe solutions in E_d: one per higher mode with mu_j < d^2 at
/// alpha = (sqrt(mu_j) + d)/2, the rest from the mode-1 continuum on [sqrt(mu1), d].
std::optional<SolutionSpan> dimension_probes(const StripDomain& domain, double d, std::size_t k);

struct DimensionOptions {
    std::vector<double> ladder = {1.0, 0.5, 0.25};
    int m0 = 1;
    int kernel_points = 16;
    std::uint64_t seed = 1;
    GramMethod method = GramMethod::ClosedForm;
};

struct DimensionReport {
    double d = 0.0;
    std::size_t k = 0;
    int n = 1;
    bool vacuous = false;
    std::string message;
    std::size_t probe_count = 0;
    std::size_t higher_modes = 0;
    std::size_t weyl_count = 0;
    double delta = 0.0;
    double sigma = 0.0;
    double sigma_reference = 0.0;
    std::optional<GoodBasis> basis;
    std::optional<TraceBoundReport> trace;
    double rotation_defect = 0.0;
    double kernel_defect = 0.0;
    DeltaLadder ladder;
    bool lower_chain = false;   ///< trace >= e^{-20} k
    double upper_chain_rhs = 0.0; ///< C_emp d^{n+2}
    bool upper_chain = false;   ///< trace <= C_emp d^{n+2}
    double C_emp = 0.0;
    double implied_k_bound = 0.0; ///< e^{20} C_emp d^{n+2}
    bool implied_bound_holds = false;
    bool pass = false;
};

DimensionReport dimension_experiment(const StripDomain& domain, double d, std::size_t k,
                                     const DimensionOptions& opt = {});

} // namespace ancient
