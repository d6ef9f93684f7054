#include "ancient/cm.hpp"
#include "ancient/error.hpp"
#include "ancient/rng.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ancient {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

// log(c^T G c) for G = diag(e^ls) core diag(e^ls); also returns the value
// relative to e^{2 shift} and the absolute-value scale used for tolerances.
struct LogQuadratic {
    double shift = kNegInf;
    double q = 0.0;
    double scale = 0.0;
};

LogQuadratic log_quadratic(const GramMatrix& g, const Vector& c) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Vector lg(n);
    LogQuadratic out;
    for (Eigen::Index j = 0; j < n; ++j) {
        lg(j) = c(j) == 0.0 ? kNegInf : std::log(std::abs(c(j))) + g.log_scale(j);
        out.shift = std::max(out.shift, lg(j));
    }
    if (out.shift == kNegInf) return out;
    Vector y(n), a(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        y(j) = lg(j) == kNegInf ? 0.0 : std::copysign(std::exp(lg(j) - out.shift), c(j));
        a(j) = std::abs(y(j)) * std::sqrt(std::max(0.0, g.core(j, j)));
    }
    out.q = y.dot(g.core * y);
    out.scale = a.sum() * a.sum();
    return out;
}

std::vector<std::size_t> sorted_indices(const std::vector<double>& key) {
    std::vector<std::size_t> idx(key.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    return idx;
}

} // namespace

MonotoneTable MonotoneTable::from_values(double delta, const Matrix& values, double d_growth,
                                         std::vector<double> C_growth) {
    require(delta > 0.0, "MonotoneTable: delta must be positive");
    require(values.rows() >= 1 && values.cols() >= 2, "MonotoneTable: need at least one function and two radii");
    MonotoneTable t;
    t.delta = delta;
    for (Eigen::Index m = 0; m < values.cols(); ++m) t.radii.push_back(static_cast<double>(m) * delta);
    t.values = values;
    t.log_values = values.unaryExpr([](double v) {
        require(v >= 0.0 && !std::isnan(v), "MonotoneTable: values must be non-negative");
        return safe_log(v);
    });
    t.d_growth = d_growth;
    t.C_growth = std::move(C_growth);
    return t;
}

namespace {

// Fills column c of the table from the Gram matrix `gp` of rows R = T C,
// T unit lower triangular. R spans the same nested subspaces as the span
// elements, so its Cholesky pivots are the f_i of the span; projections are
// mapped back to the span elements through T.
void fill_f_column(MonotoneTable& t, Eigen::Index c, const GramMatrix& g, const GramMatrix& gp, const Matrix& T) {
    const auto k = static_cast<Eigen::Index>(g.size());
    check_gram(gp);
    const SemidefiniteCholesky ch = semidefinite_cholesky(gp.core);
    Matrix P = Matrix::Identity(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double piv = ch.pivots(i);
        t.log_values(i, c) = piv > 0.0 ? 2.0 * gp.log_scale(i) + std::log(piv) : kNegInf;
        t.values(i, c) = std::exp(t.log_values(i, c));
        t.log_energies(i, c) = g.log_diagonal(i);
        if (i == 0) continue;
        // lambda in the scaled coordinates: C_{<i} lh = c_{<i,i}
        bool deficient = false;
        for (Eigen::Index j = 0; j < i; ++j) deficient = deficient || ch.deficient[static_cast<std::size_t>(j)];
        Vector lh;
        if (!deficient) {
            lh = backward_substitute_transposed(ch.lower.topLeftCorner(i, i), ch.lower.row(i).head(i).transpose());
        } else {
            lh = pseudo_inverse_psd(gp.core.topLeftCorner(i, i)) * gp.core.col(i).head(i);
        }
        for (Eigen::Index j = 0; j < i; ++j) {
            const double lam = lh(j) == 0.0 ? 0.0 : lh(j) * std::exp(gp.log_scale(i) - gp.log_scale(j));
            P(i, j) = -lam;
        }
    }
    t.projections.push_back(P * T);
}

MonotoneTable empty_table(const std::vector<GramMatrix>& grams, const std::vector<double>& radii) {
    require(!grams.empty() && grams.size() == radii.size(), "compute_f: one Gram matrix per radius");
    MonotoneTable t;
    t.radii = radii;
    t.method = grams.front().method;
    t.ids = grams.front().basis_ids;
    const auto k = static_cast<Eigen::Index>(grams.front().size());
    const auto n = static_cast<Eigen::Index>(grams.size());
    t.values.resize(k, n);
    t.log_values.resize(k, n);
    t.log_energies.resize(k, n);
    for (const GramMatrix& g : grams) {
        if (g.method != *t.method)
            fail(ErrorCategory::Precondition, "compute_f: Gram matrices mix methods (" + to_string(g.method) + " and " +
                                                  to_string(*t.method) + ")");
        if (g.basis_ids != t.ids) fail(ErrorCategory::Precondition, "compute_f: Gram matrices use different bases");
        if (static_cast<Eigen::Index>(g.size()) != k) fail(ErrorCategory::Precondition, "compute_f: Gram sizes differ");
    }
    t.grams = grams;
    return t;
}

// Unit lower T such that row i of T C has zeros in the columns claimed by
// rows j < i. Each row claims its column of largest energy share
// |c_a| I_a(r)^{1/2}, so the reduced rows have separated leading terms and
// their Gram matrix keeps its digits even when the span elements are all
// dominated by one fast basis solution.
Matrix flag_reduction(const SolutionSpan& span, double r, Matrix& reduced) {
    const auto& basis = span.basis();
    const auto nb = static_cast<Eigen::Index>(basis.size());
    reduced = span.coefficients();
    const auto k = reduced.rows();
    Vector ls(nb);
    for (Eigen::Index a = 0; a < nb; ++a) ls(a) = 0.5 * log_energy_closed(basis[static_cast<std::size_t>(a)], r);
    Matrix T = Matrix::Identity(k, k);
    std::vector<Eigen::Index> pivot(static_cast<std::size_t>(k), -1);
    std::vector<bool> claimed(static_cast<std::size_t>(nb), false);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            const Eigen::Index p = pivot[static_cast<std::size_t>(j)];
            if (p < 0 || reduced(i, p) == 0.0) continue;
            const double l = reduced(i, p) / reduced(j, p);
            reduced.row(i) -= l * reduced.row(j);
            reduced(i, p) = 0.0;
            T.row(i) -= l * T.row(j);
        }
        double best = kNegInf;
        for (Eigen::Index a = 0; a < nb; ++a) {
            if (claimed[static_cast<std::size_t>(a)] || reduced(i, a) == 0.0) continue;
            const double v = std::log(std::abs(reduced(i, a))) + ls(a);
            if (v > best) {
                best = v;
                pivot[static_cast<std::size_t>(i)] = a;
            }
        }
        if (pivot[static_cast<std::size_t>(i)] >= 0) claimed[static_cast<std::size_t>(pivot[static_cast<std::size_t>(i)])] = true;
    }
    return T;
}

} // namespace

MonotoneTable compute_f(const std::vector<GramMatrix>& grams, const std::vector<double>& radii) {
    MonotoneTable t = empty_table(grams, radii);
    const auto k = static_cast<Eigen::Index>(grams.front().size());
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(grams.size()); ++c) {
        const GramMatrix& g = grams[static_cast<std::size_t>(c)];
        fill_f_column(t, c, g, g, Matrix::Identity(k, k));
    }
    return t;
}

MonotoneTable compute_f(const SolutionSpan& span, const std::vector<double>& radii, GramMethod method,
                        const std::optional<SpaceTimeGrid>& grid) {
    std::vector<GramMatrix> grams;
    grams.reserve(radii.size());
    for (double r : radii) grams.push_back(gram(span, r, method, grid));
    MonotoneTable t = empty_table(grams, radii);
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(radii.size()); ++c) {
        const GramMatrix& g = grams[static_cast<std::size_t>(c)];
        check_gram(g);
        Matrix reduced;
        const Matrix T = flag_reduction(span, radii[static_cast<std::size_t>(c)], reduced);
        fill_f_column(t, c, g, gram_of_combinations(span, reduced, radii[static_cast<std::size_t>(c)], method, grid), T);
    }
    return t;
}

MonotoneTable compute_f_ladder(const SolutionSpan& span, double delta, int M, GramMethod method,
                               const std::optional<SpaceTimeGrid>& grid) {
    require(delta > 0.0 && M >= 1, "compute_f_ladder: need delta > 0 and M >= 1");
    std::vector<double> radii;
    for (int m = 1; m <= M; ++m) radii.push_back(m * delta);
    MonotoneTable inner = compute_f(span, radii, method, grid);
    // radius 0: Q_0 is empty, so f = 0 and the projection is trivial
    MonotoneTable t;
    t.delta = delta;
    t.method = inner.method;
    t.ids = inner.ids;
    const auto k = static_cast<Eigen::Index>(inner.size());
    t.radii.push_back(0.0);
    t.radii.insert(t.radii.end(), radii.begin(), radii.end());
    t.values = Matrix::Zero(k, M + 1);
    t.values.rightCols(M) = inner.values;
    t.log_values = Matrix::Constant(k, M + 1, kNegInf);
    t.log_values.rightCols(M) = inner.log_values;
    t.log_energies = Matrix::Constant(k, M + 1, kNegInf);
    t.log_energies.rightCols(M) = inner.log_energies;
    t.projections.push_back(Matrix::Identity(k, k));
    t.projections.insert(t.projections.end(), inner.projections.begin(), inner.projections.end());
    t.grams = std::move(inner.grams);
    t.grams_offset = 1;
    return t;
}

void attach_growth_bounds(MonotoneTable& table, const SolutionSpan& span) {
    require(table.size() == span.size(), "attach_growth_bounds: table and span sizes differ");
    double d = 0.0;
    table.C_growth.clear();
    for (std::size_t i = 0; i < span.size(); ++i) {
        for (const auto& term : span.element(i)) {
            const GrowthClass g = classify_growth(term);
            if (g.kind != GrowthClass::Kind::EdMember)
                fail(ErrorCategory::Precondition, "attach_growth_bounds: element " + span.ids()[i] + " is not in any E_d");
            d = std::max(d, g.d_min);
        }
    }
    // I_u(r) <= C_w^2 vol(Q_r) e^{4dr} and vol(Q_r) = 2 r^3 V0 <= 54 e^{-3} V0 e^{r}
    for (std::size_t i = 0; i < span.size(); ++i) {
        const double w = growth_witness(span.element(i));
        table.C_growth.push_back(w * w * 54.0 * std::exp(-3.0) * span.domain().volume());
    }
    table.d = d;
    table.d_growth = 4.0 * d + 1.0;
}

Matrix projection_lambdas(const MonotoneTable& table, std::size_t m) {
    require(m < table.projections.size(), "projection_lambdas: radius index out of range");
    Matrix L = -table.projections[m];
    L.diagonal().setZero();
    return L;
}

FPropertiesReport verify_monotone(const MonotoneTable& table) {
    FPropertiesReport rep;
    const auto k = table.size();
    for (std::size_t i = 0; i < k; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        bool any_positive = false;
        for (std::size_t m = 0; m < table.count(); ++m) {
            const auto mm = static_cast<Eigen::Index>(m);
            const double v = table.values(ii, mm);
            if (v < 0.0 || std::isnan(v)) {
                rep.monotone_ok = false;
                rep.violations.push_back({"nonnegative", i, m, "f = " + std::to_string(v)});
            }
            any_positive = any_positive || table.log_values(ii, mm) > kNegInf;
            if (m + 1 == table.count()) continue;
            const double a = table.values(ii, mm), b = table.values(ii, mm + 1);
            bool ok;
            if (std::isfinite(a) && std::isfinite(b)) ok = b >= a - 1e-12 * std::max(1.0, a);
            else ok = table.log_values(ii, mm + 1) >= table.log_values(ii, mm) + std::log1p(-1e-12);
            if (!ok) {
                rep.monotone_ok = false;
                rep.violations.push_back({"non-decreasing", i, m,
                                          "f(r_" + std::to_string(m + 1) + ") < f(r_" + std::to_string(m) + ")"});
            }
        }
        if (!any_positive) {
            rep.monotone_ok = false;
            rep.violations.push_back({"not-identically-zero", i, 0, "f vanishes on every radius"});
        }
    }
    return rep;
}

FPropertiesReport verify_f_properties(const MonotoneTable& table, const SolutionSpan& span, std::optional<double> d,
                                      const std::vector<double>& C_list) {
    require(table.size() == span.size(), "verify_f_properties: table and span sizes differ");
    require(!table.grams.empty(), "verify_f_properties: table carries no Gram matrices");
    FPropertiesReport rep = verify_monotone(table);
    MonotoneTable bounds = table;
    attach_growth_bounds(bounds, span);
    const double dd = d.value_or(bounds.d);
    std::vector<double> wit;
    for (std::size_t i = 0; i < span.size(); ++i) wit.push_back(growth_witness(span.element(i)));
    std::vector<double> C = C_list.empty() ? bounds.C_growth : C_list;
    require(C.size() == table.size(), "verify_f_properties: one constant per function");
    const double V0 = span.domain().volume();

    rep.worst_bound_log_margin = kInf;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        for (std::size_t m = 0; m < table.count(); ++m) {
            const double r = table.radii[m];
            if (r <= 0.0) continue;
            const auto mm = static_cast<Eigen::Index>(m);
            const double lf = table.log_values(ii, mm);
            const double margin = std::log(C[i]) + (4.0 * dd + 1.0) * r - lf;
            rep.worst_bound_log_margin = std::min(rep.worst_bound_log_margin, margin);
            if (!(margin >= -1e-12)) {
                rep.bound_ok = false;
                rep.violations.push_back({"exp-bound", i, m, "log f exceeds log C + (4d+1) r by " + std::to_string(-margin)});
            }
            const double le = table.log_energies(ii, mm);
            const double lb = 2.0 * std::log(wit[i]) + std::log(2.0 * r * r * r * V0) + 4.0 * dd * r;
            if (!(le <= lb + 1e-12)) {
                rep.energy_bound_ok = false;
                rep.violations.push_back({"energy-bound", i, m, "log I_u exceeds log(C vol e^{4dr})"});
            }
        }
    }

    // (2): f_i(s) <= I_{w_{i,r}}(s) for every pair of stored radii
    for (std::size_t b = 0; b < table.count(); ++b) {
        if (table.radii[b] <= 0.0) continue;
        for (std::size_t a = 0; a < table.count(); ++a) {
            if (table.radii[a] <= 0.0) continue;
            const GramMatrix& gs = table.gram_at(a);
            for (std::size_t i = 0; i < table.size(); ++i) {
                const Vector c = table.projections[b].row(static_cast<Eigen::Index>(i)).transpose();
                const LogQuadratic q = log_quadratic(gs, c);
                const double lf = table.log_values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
                ++rep.pairs_checked;
                if (lf == kNegInf) continue;
                const double fs = std::exp(lf - 2.0 * q.shift);
                if (!(fs <= q.q + 1e-9 * q.scale)) {
                    rep.projection_ok = false;
                    rep.violations.push_back({"projection", i, a,
                                              "f_i(s) > I_{w_{i,r}}(s) with r = " + std::to_string(table.radii[b])});
                }
            }
        }
    }
    return rep;
}

double ratio(const MonotoneTable& table, std::size_t i, std::size_t m) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto mm = static_cast<Eigen::Index>(m);
    const double a = table.values(ii, mm), b = table.values(ii, mm + 1);
    if (a == 0.0 && b == 0.0) return 1.0;
    if (a == 0.0) return kInf;
    if (std::isfinite(a) && std::isfinite(b) && a > 0.0) {
        const double q = b / a;
        if (std::isfinite(q) && q > 0.0) return q;
    }
    return std::exp(table.log_values(ii, mm + 1) - table.log_values(ii, mm));
}

bool ratio_holds(const MonotoneTable& table, std::size_t i, std::size_t m, double sigma) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto mm = static_cast<Eigen::Index>(m);
    const double a = table.values(ii, mm), b = table.values(ii, mm + 1);
    const double sa = sigma * a;
    if (std::isfinite(b) && std::isfinite(sa)) return b <= sa;
    return table.log_values(ii, mm + 1) <= std::log(sigma) + table.log_values(ii, mm);
}

double selection_threshold(std::size_t k, std::size_t ell, double delta, double d) {
    require(ell >= 1 && ell <= k, "selection_threshold: need 1 <= ell <= k");
    return std::exp(static_cast<double>(k) / static_cast<double>(k - ell + 1) * delta * d);
}

SelectionReport select_scales(const MonotoneTable& table, std::size_t ell, double sigma, int m0, int M) {
    require(table.is_ladder(), "select_scales: table radii must be a delta ladder");
    const std::size_t k = table.size();
    require(ell >= 1 && ell <= k, "select_scales: need 1 <= ell <= k");
    require(m0 >= 0 && m0 < M, "select_scales: need 0 <= m0 < M");
    require(static_cast<std::size_t>(M) < table.count(), "select_scales: M exceeds the table");
    SelectionReport rep;
    rep.k = k;
    rep.ell = ell;
    rep.sigma = sigma;
    rep.delta = table.delta;
    rep.m0 = m0;
    rep.M = M;
    rep.threshold = selection_threshold(k, ell, table.delta, table.d_growth);
    if (!(sigma > rep.threshold))
        fail(ErrorCategory::Precondition, "select_scales: sigma = " + std::to_string(sigma) +
                                              " does not exceed the threshold exp(k/(k-ell+1) delta d) = " +
                                              std::to_string(rep.threshold));
    rep.ratios.resize(static_cast<Eigen::Index>(k), M - m0);
    for (int m = m0; m < M; ++m) {
        std::vector<double> key(k);
        std::vector<std::size_t> ok;
        for (std::size_t i = 0; i < k; ++i) {
            key[i] = ratio(table, i, static_cast<std::size_t>(m));
            rep.ratios(static_cast<Eigen::Index>(i), m - m0) = key[i];
        }
        for (std::size_t i : sorted_indices(key))
            if (ratio_holds(table, i, static_cast<std::size_t>(m), sigma)) ok.push_back(i);
        if (ok.size() < ell) continue;
        ok.resize(ell);
        rep.m_list.push_back(m);
        rep.subsets.push_back(ok);
    }
    if (rep.m_list.empty())
        fail(ErrorCategory::Numerical, "select_scales: M-too-small: no m in [" + std::to_string(m0) + ", " +
                                           std::to_string(M) + ") admits " + std::to_string(ell) + " functions");
    rep.subset = rep.subsets.front();
    return rep;
}

SimultaneousBasis simultaneous_diagonalize(const Matrix& A, const Matrix& B) {
    require(A.rows() == A.cols() && B.rows() == B.cols() && A.rows() == B.rows() && A.rows() >= 1,
            "simultaneous_diagonalize: need square matrices of equal size");
    const SymmetricEigen ea = jacobi_eigen(0.5 * (A + A.transpose()));
    const double amax = ea.values(0);
    const double amin = ea.values(ea.values.size() - 1);
    if (!(amax > 0.0 && amin > 1e-12 * amax))
        fail(ErrorCategory::Precondition, "simultaneous_diagonalize: A is not positive definite (min eigenvalue " +
                                              std::to_string(amin) + ", max " + std::to_string(amax) + ")");
    const SemidefiniteCholesky ch = semidefinite_cholesky(0.5 * (A + A.transpose()), 0.0);
    const Matrix& L = ch.lower;
    const auto n = A.rows();
    // M = L^{-1} B L^{-T}
    Matrix X(n, n);
    for (Eigen::Index j = 0; j < n; ++j) X.col(j) = forward_substitute(L, B.col(j));
    Matrix Mw(n, n);
    for (Eigen::Index j = 0; j < n; ++j) Mw.row(j) = forward_substitute(L, X.row(j).transpose()).transpose();
    Mw = 0.5 * (Mw + Mw.transpose());
    const SymmetricEigen e = jacobi_eigen(Mw);
    SimultaneousBasis out;
    out.V.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) out.V.col(j) = backward_substitute_transposed(L, e.vectors.col(j));
    normalize_column_signs(out.V);
    out.values = e.values;
    out.residual_a = max_abs(out.V.transpose() * A * out.V - Matrix::Identity(n, n));
    out.residual_b = max_off_diagonal(out.V.transpose() * B * out.V);
    return out;
}

double good_basis_sigma(double d, double delta) { return 0.5 * std::exp((8.0 * d + 2.0) * delta); }
double reference_sigma(double d) { return 0.5 * std::exp(8.0 + 1.0 / (2.0 * d)); }

Matrix to_basis_coefficients(const SolutionSpan& span, const Matrix& over_elements) {
    require(over_elements.cols() == static_cast<Eigen::Index>(span.size()),
            "to_basis_coefficients: column count must equal the span size");
    return over_elements * span.coefficients();
}

GoodBasis good_basis(const SolutionSpan& span, double delta, int m0, const GoodBasisOptions& opt) {
    require(delta > 0.0, "good_basis: delta must be positive");
    require(span.size() >= 2 && span.size() % 2 == 0, "good_basis: the span must have 2k elements");
    require(m0 >= 0, "good_basis: m0 must be non-negative");
    GoodBasis gb;
    gb.k = span.size() / 2;
    gb.delta = delta;
    const int M = opt.M > 0 ? opt.M : static_cast<int>(std::ceil(64.0 / delta - 1e-9));
    MonotoneTable table = compute_f_ladder(span, delta, M, opt.method, opt.grid);
    attach_growth_bounds(table, span);
    gb.d = opt.d.value_or(table.d);
    table.d_growth = 4.0 * gb.d + 1.0;
    gb.sigma = opt.sigma.value_or(good_basis_sigma(gb.d, delta));
    gb.sigma_reference = reference_sigma(gb.d);
    gb.m0_requested = m0;

    // "choose m0 large enough": every f_i positive from m0 on
    int first_positive = 0;
    for (std::size_t m = 0; m < table.count(); ++m) {
        bool all = true;
        for (std::size_t i = 0; i < table.size(); ++i)
            all = all && table.log_values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) > kNegInf;
        if (!all) first_positive = static_cast<int>(m) + 1;
    }
    gb.m0_used = std::max(m0, first_positive);
    if (gb.m0_used != m0)
        gb.notes.push_back("m0 raised from " + std::to_string(m0) + " to " + std::to_string(gb.m0_used) +
                           " so that every f_i(m0 delta) > 0");
    if (gb.m0_used >= M)
        fail(ErrorCategory::Numerical, "good_basis: M-too-small: some f_i vanishes up to M delta");

    gb.selection = select_scales(table, gb.k, 2.0 * gb.sigma, gb.m0_used, M);
    gb.m = gb.selection.m_list.front();
    gb.subset = gb.selection.subset;
    const auto m = static_cast<std::size_t>(gb.m);
    const double r_top = (gb.m + 1) * delta;
    const double r_bot = gb.m * delta;

    const auto k = static_cast<Eigen::Index>(gb.k);
    const auto n2 = static_cast<Eigen::Index>(span.size());
    gb.W.resize(k, n2);
    for (Eigen::Index i = 0; i < k; ++i) {
        const std::size_t a = gb.subset[static_cast<std::size_t>(i)];
        const double lf = table.log_values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(m + 1));
        gb.W.row(i) = table.projections[m + 1].row(static_cast<Eigen::Index>(a)) * std::exp(-0.5 * lf);
        gb.ratio_sum += std::exp(table.log_values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(m)) - lf);
    }
    const GramMatrix gtop = gram_of_combinations(span, to_basis_coefficients(span, gb.W), r_top, opt.method, opt.grid);
    const GramMatrix gbot = gram_of_combinations(span, to_basis_coefficients(span, gb.W), r_bot, opt.method, opt.grid);
    gb.conditioning_top = gtop.conditioning();
    gb.conditioning_bottom = gbot.conditioning();
    const SimultaneousBasis sb = simultaneous_diagonalize(gtop.entries(), gbot.entries());
    gb.V_all = sb.V.transpose() * gb.W;
    gb.values_all = sb.values;
    gb.trace_all = sb.values.sum();

    for (Eigen::Index i = 0; i < k; ++i)
        if (sb.values(i) >= 1.0 / gb.sigma) gb.retained.push_back(static_cast<std::size_t>(i));
    gb.ell = gb.retained.size();
    gb.v.resize(static_cast<Eigen::Index>(gb.ell), n2);
    gb.I_small.resize(static_cast<Eigen::Index>(gb.ell));
    for (std::size_t i = 0; i < gb.ell; ++i) {
        gb.v.row(static_cast<Eigen::Index>(i)) = gb.V_all.row(static_cast<Eigen::Index>(gb.retained[i]));
        gb.I_small(static_cast<Eigen::Index>(i)) = sb.values(static_cast<Eigen::Index>(gb.retained[i]));
        gb.trace_retained += gb.I_small(static_cast<Eigen::Index>(i));
    }

    // residuals recomputed from the final coefficients
    const Matrix top = gram_of_combinations(span, to_basis_coefficients(span, gb.V_all), r_top, opt.method, opt.grid).entries();
    const Matrix bot = gram_of_combinations(span, to_basis_coefficients(span, gb.V_all), r_bot, opt.method, opt.grid).entries();
    gb.residual_top = max_abs(top - Matrix::Identity(k, k));
    gb.residual_offdiag = max_off_diagonal(bot);

    const double kd = static_cast<double>(gb.k);
    gb.chain_stated = gb.trace_all >= 2.0 * kd / gb.sigma;
    gb.chain_corrected = gb.trace_all >= gb.ratio_sum * (1.0 - 1e-9) && gb.ratio_sum >= kd / (2.0 * gb.sigma);
    gb.ell_bound = static_cast<double>(gb.ell) >= kd / gb.sigma;
    gb.hard_bound = gb.trace_retained <= static_cast<double>(gb.ell);
    return gb;
}

KernelTrace kernel_trace(const SolutionSpan& span, const Matrix& V, double radius, const std::vector<SamplePoint>& points,
                         std::uint64_t seed) {
    require(V.rows() >= 1 && V.cols() == static_cast<Eigen::Index>(span.size()), "kernel_trace: V must be l x span size");
    const auto l = V.rows();
    SeededRng rng(seed);
    Matrix P = Matrix::Identity(l, l);
    for (Eigen::Index i = 0; i < l; ++i)
        for (Eigen::Index j = 0; j < l; ++j) P(i, j) += 0.5 * rng.normal();
    const Matrix B = P * V;
    const GramMatrix gB = gram_of_combinations(span, to_basis_coefficients(span, B), radius, GramMethod::ClosedForm);
    const Matrix G = gB.entries();
    const SemidefiniteCholesky ch = semidefinite_cholesky(G, 0.0);
    for (bool dfc : ch.deficient)
        if (dfc) fail(ErrorCategory::Numerical, "kernel_trace: mixed basis is singular");

    KernelTrace kt;
    kt.points = points;
    double kmax = 0.0, dmax = 0.0;
    const auto n = static_cast<Eigen::Index>(span.size());
    for (const auto& p : points) {
        Vector e(n);
        for (Eigen::Index i = 0; i < n; ++i) e(i) = span.evaluate(static_cast<std::size_t>(i), p.t, p.x);
        const Vector vv = V * e;
        const double K = vv.squaredNorm();
        const Vector z = forward_substitute(ch.lower, B * e);
        const double Kg = z.squaredNorm();
        kt.K.push_back(K);
        kt.K_gram.push_back(Kg);
        kmax = std::max(kmax, K);
        dmax = std::max(dmax, std::abs(K - Kg));
    }
    kt.max_relative_defect = kmax > 0.0 ? dmax / kmax : dmax;
    return kt;
}

double kernel_rotation_defect(const SolutionSpan& span, const Matrix& V, const std::vector<SamplePoint>& points,
                              std::uint64_t seed) {
    const auto l = V.rows();
    SeededRng rng(seed);
    Matrix R(l, l);
    for (Eigen::Index i = 0; i < l; ++i)
        for (Eigen::Index j = 0; j < l; ++j) R(i, j) = rng.normal();
    const Matrix Q = Eigen::HouseholderQR<Matrix>(R).householderQ();
    const Matrix QV = Q * V;
    const auto n = static_cast<Eigen::Index>(span.size());
    double kmax = 0.0, dmax = 0.0;
    for (const auto& p : points) {
        Vector e(n);
        for (Eigen::Index i = 0; i < n; ++i) e(i) = span.evaluate(static_cast<std::size_t>(i), p.t, p.x);
        const double a = (V * e).squaredNorm();
        const double b = (QV * e).squaredNorm();
        kmax = std::max(kmax, a);
        dmax = std::max(dmax, std::abs(a - b));
    }
    return kmax > 0.0 ? dmax / kmax : dmax;
}

std::vector<SamplePoint> kernel_sample_points(const StripDomain& domain, double r, int count, std::uint64_t seed) {
    require(r > 0.0 && count >= 1, "kernel_sample_points: need r > 0 and count >= 1");
    SeededRng rng(seed);
    std::vector<SamplePoint> pts;
    for (int i = 0; i < count; ++i) {
        SamplePoint p;
        p.t = -r * r * rng.uniform();
        p.x.x0 = rng.uniform(-r, r);
        for (int a = 0; a < domain.n(); ++a) p.x.cross[static_cast<std::size_t>(a)] = domain.length(a) * rng.uniform();
        pts.push_back(p);
    }
    return pts;
}

TraceBoundReport trace_bound_check(const SolutionSpan& span, const GoodBasis& basis, GramMethod method,
                                   const std::optional<SpaceTimeGrid>& grid) {
    require(basis.delta > 0.0 && basis.delta <= 1.0, "trace_bound_check: need 0 < delta <= 1");
    TraceBoundReport rep;
    rep.a = basis.m * basis.delta;
    rep.delta = basis.delta;
    rep.ell = basis.ell;
    if (basis.ell > 0) {
        const Matrix g =
            gram_of_combinations(span, to_basis_coefficients(span, basis.v), rep.a, method, grid).entries();
        rep.trace = g.trace();
    }
    const int n = span.domain().n();
    const int cells = 2000;
    const auto w = simpson_weights(cells, 0.5 * rep.a / cells);
    for (int i = 0; i <= cells; ++i) {
        const double r = 0.5 * rep.a + i * (0.5 * rep.a / cells);
        rep.annulus_kernel += w[static_cast<std::size_t>(i)] * std::pow(rep.a + rep.delta - r, -(n + 3)) * r * r;
    }
    rep.annulus_kernel *= span.domain().volume();
    rep.empirical_constant = rep.trace * std::pow(rep.delta, n + 2);
    rep.hard_bound = rep.trace <= static_cast<double>(rep.ell);
    rep.pass = rep.hard_bound;
    return rep;
}

DeltaLadder delta_ladder(const SolutionSpan& span, const std::vector<double>& deltas, int m0, const GoodBasisOptions& opt) {
    require(!deltas.empty(), "delta_ladder: need at least one delta");
    std::vector<double> ds = deltas;
    std::sort(ds.begin(), ds.end(), std::greater<>());
    DeltaLadder lad;
    lad.monotone = true;
    lad.constant_monotone = true;
    for (double delta : ds) {
        LadderStep s;
        s.delta = delta;
        try {
            GoodBasisOptions o = opt;
            o.sigma.reset();
            o.M = 0;
            const GoodBasis gb = good_basis(span, delta, m0, o);
            const TraceBoundReport tr = trace_bound_check(span, gb, o.method, o.grid);
            s.ok = tr.pass;
            s.ell = gb.ell;
            s.m = gb.m;
            s.trace = tr.trace;
            s.empirical_constant = tr.empirical_constant;
        } catch (const Error& e) {
            s.ok = false;
            s.error = e.what();
        }
        if (!s.ok) lad.monotone = lad.constant_monotone = false;
        if (!lad.steps.empty() && lad.steps.back().ok && s.ok) {
            const LadderStep& p = lad.steps.back();
            if (!(s.trace >= p.trace * (1.0 - 1e-12))) lad.monotone = false;
            if (!(s.empirical_constant <= p.empirical_constant * (1.0 + 1e-12))) lad.constant_monotone = false;
        }
        if (!std::isfinite(s.empirical_constant)) lad.monotone = false;
        lad.max_constant = std::max(lad.max_constant, s.empirical_constant);
        lad.steps.push_back(s);
    }
    return lad;
}

std::optional<SolutionSpan> dimension_probes(const StripDomain& domain, double d, std::size_t k) {
    require(k >= 1, "dimension_probes: k must be at least 1");
    const double mu1 = domain.first_eigenvalue();
    if (!(d * d > mu1)) return std::nullopt;
    const std::size_t want = 2 * k;
    std::vector<SeparatedSolution> basis;
    const auto modes = box_eigenpairs(domain, d * d);
    for (std::size_t j = 1; j < modes.size() && basis.size() + 1 < want; ++j) {
        if (!(modes[j].mu < d * d)) continue;
        const double alpha = 0.5 * (std::sqrt(modes[j].mu) + d);
        basis.push_back(SeparatedSolution::make(1.0, alpha, modes[j]));
    }
    const std::size_t rest = want - basis.size();
    if (rest == 1) {
        basis.push_back(SeparatedSolution::make(1.0, d, modes.front()));
    } else {
        const SolutionSpan cont = build_continuum_family(domain, d, static_cast<int>(rest));
        for (const auto& u : cont.basis()) basis.push_back(u);
    }
    return SolutionSpan(domain, basis);
}

DimensionReport dimension_experiment(const StripDomain& domain, double d, std::size_t k, const DimensionOptions& opt) {
    require(d >= 1.0, "dimension_experiment: need d >= 1");
    require(k >= 1, "dimension_experiment: need k >= 1");
    DimensionReport rep;
    rep.d = d;
    rep.k = k;
    rep.n = domain.n();
    rep.delta = 1.0 / d;
    rep.sigma = good_basis_sigma(d, rep.delta);
    rep.sigma_reference = reference_sigma(d);
    rep.weyl_count = weyl_count(domain, d);
    const auto probes = dimension_probes(domain, d, k);
    if (!probes) {
        rep.vacuous = true;
        rep.pass = true;
        rep.message = "E_d probe set empty: d^2 = " + std::to_string(d * d) + " <= mu1 = " +
                      std::to_string(domain.first_eigenvalue()) + "; pipeline vacuous";
        return rep;
    }
    const SolutionSpan& span = *probes;
    rep.probe_count = span.size();
    for (const auto& u : span.basis())
        if (u.mode.mu > domain.first_eigenvalue() * (1.0 + 1e-12)) ++rep.higher_modes;

    GoodBasisOptions gopt;
    gopt.method = opt.method;
    gopt.d = d;
    rep.basis = good_basis(span, rep.delta, opt.m0, gopt);
    const GoodBasis& gb = *rep.basis;
    rep.trace = trace_bound_check(span, gb, opt.method);

    if (gb.ell > 0) {
        const auto pts = kernel_sample_points(domain, gb.m * gb.delta, opt.kernel_points, opt.seed);
        rep.rotation_defect = kernel_rotation_defect(span, gb.v, pts, opt.seed);
        rep.kernel_defect = kernel_trace(span, gb.v, (gb.m + 1) * gb.delta, pts, opt.seed).max_relative_defect;
    }
    rep.ladder = delta_ladder(span, opt.ladder, opt.m0, gopt);

    const double dn = std::pow(d, rep.n + 2);
    rep.C_emp = std::max(rep.ladder.max_constant, rep.trace->empirical_constant);
    rep.lower_chain = rep.trace->trace >= std::exp(-20.0) * static_cast<double>(k);
    rep.upper_chain_rhs = rep.C_emp * dn;
    rep.upper_chain = rep.trace->trace <= rep.upper_chain_rhs * (1.0 + 1e-12);
    rep.implied_k_bound = std::exp(20.0) * rep.C_emp * dn;
    rep.implied_bound_holds = static_cast<double>(k) <= rep.implied_k_bound;
    rep.pass = gb.residual_top < 1e-8 && gb.residual_offdiag < 1e-8 && gb.hard_bound && gb.ell_bound &&
               rep.trace->hard_bound && rep.rotation_defect <= 1e-10 && rep.ladder.monotone && rep.lower_chain &&
               rep.upper_chain;
    if (rep.probe_count > 0)
        rep.message = "probe family includes the mode-1 continuum alpha in [sqrt(mu1), d], which spans an "
                      "infinite-dimensional subspace of E_d; reported, not adjudicated";
    return rep;
}

} // namespace ancient
