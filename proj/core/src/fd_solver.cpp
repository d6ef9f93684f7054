#include "ancient/fd_solver.hpp"
#include "ancient/error.hpp"
#include "ancient/rng.hpp"

#include <lapacke.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace ancient {

OperatorCoefficients laplacian_operator() {
    OperatorCoefficients op;
    op.name = "laplacian";
    op.at = [](const SpacePoint&) {
        CoefficientSample s;
        for (int i = 0; i < 3; ++i) s.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
        return s;
    };
    op.lambda_ell = 1.0;
    op.Lambda_ell = 1.0;
    op.eps = 0.0;
    return op;
}

OperatorCoefficients operator_preset(const std::string& name) {
    if (name == "laplacian") return laplacian_operator();
    OperatorCoefficients op;
    op.name = name;
    if (name == "varying") {
        op.at = [](const SpacePoint& x) {
            CoefficientSample s;
            const double f = 1.0 + 0.1 * std::sin(x.x0);
            for (int i = 0; i < 3; ++i) s.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = f;
            return s;
        };
        op.lambda_ell = 0.9;
        op.Lambda_ell = 1.1;
        op.eps = 0.0;
        return op;
    }
    if (name == "anisotropic") {
        op.at = [](const SpacePoint&) {
            CoefficientSample s;
            s.a[0] = {1.2, 0.1, 0.0};
            s.a[1] = {0.1, 0.9, 0.0};
            s.a[2] = {0.0, 0.0, 1.0};
            s.b = {0.1, 0.0, 0.0};
            s.c = -0.05;
            return s;
        };
        op.lambda_ell = 0.85;
        op.Lambda_ell = 1.2;
        op.eps = 0.01;
        return op;
    }
    fail(ErrorCategory::Config, "unknown operator preset '" + name + "'");
}

std::vector<std::string> operator_preset_names() { return {"laplacian", "varying", "anisotropic"}; }

std::vector<std::array<double, 3>> rayleigh_directions(int dim) {
    std::vector<std::array<double, 3>> dirs;
    if (dim == 2) {
        // Half circle suffices: the quadratic form is even in xi.
        for (int k = 0; k < 26; ++k) {
            const double th = M_PI * k / 26.0;
            dirs.push_back({std::cos(th), std::sin(th), 0.0});
        }
        return dirs;
    }
    require(dim == 3, "rayleigh_directions: dimension must be 2 or 3");
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
            for (int c = -1; c <= 1; ++c) {
                if (a == 0 && b == 0 && c == 0) continue;
                const double nrm = std::sqrt(double(a * a + b * b + c * c));
                dirs.push_back({a / nrm, b / nrm, c / nrm});
            }
    return dirs;
}

CoefficientReport validate_coefficients(const OperatorCoefficients& coeffs, const SpaceTimeGrid& grid) {
    const StripDomain& d = grid.domain();
    const int dim = d.n() + 1;
    const auto dirs = rayleigh_directions(dim);
    CoefficientReport rep;
    rep.min_rayleigh = std::numeric_limits<double>::infinity();
    const int n2 = d.n() == 2 ? grid.n_cross(1) : 1;
    std::size_t node = 0;
    for (int i = 0; i < grid.n0(); ++i)
        for (int j = 0; j < grid.n_cross(0); ++j)
            for (int l = 0; l < n2; ++l, ++node) {
                SpacePoint x;
                x.x0 = grid.x0(i);
                x.cross[0] = grid.cross(0, j);
                if (d.n() == 2) x.cross[1] = grid.cross(1, l);
                const CoefficientSample s = coeffs.at(x);

                double rq = std::numeric_limits<double>::infinity();
                for (const auto& xi : dirs) {
                    double q = 0.0;
                    for (int p = 0; p < dim; ++p)
                        for (int r = 0; r < dim; ++r)
                            q += s.a[static_cast<std::size_t>(p)][static_cast<std::size_t>(r)] * xi[static_cast<std::size_t>(p)] * xi[static_cast<std::size_t>(r)];
                    rq = std::min(rq, q);
                }
                double amax = 0.0, bnorm = 0.0;
                for (int p = 0; p < dim; ++p) {
                    bnorm += s.b[static_cast<std::size_t>(p)] * s.b[static_cast<std::size_t>(p)];
                    for (int r = 0; r < dim; ++r) amax = std::max(amax, std::abs(s.a[static_cast<std::size_t>(p)][static_cast<std::size_t>(r)]));
                }
                bnorm = std::sqrt(bnorm);
                rep.min_rayleigh = std::min(rep.min_rayleigh, rq);
                rep.max_abs_a = std::max(rep.max_abs_a, amax);
                rep.max_b = std::max(rep.max_b, bnorm);
                rep.max_c = node == 0 ? s.c : std::max(rep.max_c, s.c);
                ++rep.nodes_checked;

                std::string reason;
                // 1e-12 slack absorbs rounding in the normalized directions
                constexpr double slack = 1e-12;
                if (rq < coeffs.lambda_ell * (1.0 - slack)) reason = "ellipticity: Rayleigh quotient " + std::to_string(rq) + " < lambda";
                else if (amax > coeffs.Lambda_ell * (1.0 + slack)) reason = "bound: |a_ij| " + std::to_string(amax) + " > Lambda";
                else if (bnorm > std::sqrt(coeffs.eps) * (1.0 + slack)) reason = "smallness: |b| " + std::to_string(bnorm) + " > sqrt(eps)";
                else if (s.c > coeffs.eps + slack) reason = "smallness: c " + std::to_string(s.c) + " > eps";
                if (!reason.empty()) {
                    rep.pass = false;
                    ++rep.violating_nodes;
                    if (!rep.first_violation) rep.first_violation = CoefficientViolation{node, x, reason};
                }
            }
    return rep;
}

std::string to_string(TimeScheme s) { return s == TimeScheme::ImplicitEuler ? "implicit-euler" : "crank-nicolson"; }

TimeScheme time_scheme_from_string(const std::string& s) {
    if (s == "implicit-euler" || s == "ie") return TimeScheme::ImplicitEuler;
    if (s == "crank-nicolson" || s == "cn") return TimeScheme::CrankNicolson;
    fail(ErrorCategory::Config, "unknown time scheme '" + s + "'");
}

namespace {

// Nine-point stencil of L_h on interior unknowns, row-major (x0 slow, x1 fast).
struct Stencil {
    int m0 = 0, m1 = 0;
    std::vector<std::array<double, 9>> rows; // offsets (di,dj) in {-1,0,1}^2, index (di+1)*3+(dj+1)

    std::size_t size() const { return rows.size(); }
};

Stencil assemble(const OperatorCoefficients& op, const SpaceTimeGrid& g) {
    const StripDomain& d = g.domain();
    Stencil st;
    st.m0 = g.n0() - 2;
    st.m1 = g.n_cross(0) - 2;
    st.rows.assign(static_cast<std::size_t>(st.m0) * static_cast<std::size_t>(st.m1), {});
    const double h0 = g.h0();
    const double h1 = g.h(0);
    const auto sample = [&](double x0, double x1) {
        SpacePoint x;
        x.x0 = x0;
        x.cross[0] = x1;
        return op.at(x);
    };
    (void)d;
    for (int i = 1; i <= st.m0; ++i)
        for (int j = 1; j <= st.m1; ++j) {
            auto& row = st.rows[static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(st.m1) + static_cast<std::size_t>(j - 1)];
            const auto at = [&](int di, int dj) -> double& { return row[static_cast<std::size_t>((di + 1) * 3 + (dj + 1))]; };
            const double x0 = g.x0(i);
            const double x1 = g.cross(0, j);

            const double ae = sample(x0 + 0.5 * h0, x1).a[0][0];
            const double aw = sample(x0 - 0.5 * h0, x1).a[0][0];
            const double an = sample(x0, x1 + 0.5 * h1).a[1][1];
            const double as = sample(x0, x1 - 0.5 * h1).a[1][1];
            at(1, 0) += ae / (h0 * h0);
            at(-1, 0) += aw / (h0 * h0);
            at(0, 0) -= (ae + aw) / (h0 * h0);
            at(0, 1) += an / (h1 * h1);
            at(0, -1) += as / (h1 * h1);
            at(0, 0) -= (an + as) / (h1 * h1);

            // d0(a01 d1 u) + d1(a10 d0 u), centered
            const double q = 1.0 / (4.0 * h0 * h1);
            const double a01e = sample(x0 + h0, x1).a[0][1];
            const double a01w = sample(x0 - h0, x1).a[0][1];
            const double a10n = sample(x0, x1 + h1).a[1][0];
            const double a10s = sample(x0, x1 - h1).a[1][0];
            at(1, 1) += q * (a01e + a10n);
            at(1, -1) += q * (-a01e - a10s);
            at(-1, 1) += q * (-a01w - a10n);
            at(-1, -1) += q * (a01w + a10s);

            const CoefficientSample c = sample(x0, x1);
            at(1, 0) += c.b[0] / (2.0 * h0);
            at(-1, 0) -= c.b[0] / (2.0 * h0);
            at(0, 1) += c.b[1] / (2.0 * h1);
            at(0, -1) -= c.b[1] / (2.0 * h1);
            at(0, 0) += c.c;
        }
    return st;
}

// y = L_h x on interior unknowns (boundary values are zero).
void apply(const Stencil& st, const std::vector<double>& x, std::vector<double>& y) {
    y.assign(x.size(), 0.0);
    for (int i = 0; i < st.m0; ++i)
        for (int j = 0; j < st.m1; ++j) {
            const auto& row = st.rows[static_cast<std::size_t>(i) * static_cast<std::size_t>(st.m1) + static_cast<std::size_t>(j)];
            double s = 0.0;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= st.m0 || jj < 0 || jj >= st.m1) continue;
                    s += row[static_cast<std::size_t>((di + 1) * 3 + (dj + 1))] *
                         x[static_cast<std::size_t>(ii) * static_cast<std::size_t>(st.m1) + static_cast<std::size_t>(jj)];
                }
            y[static_cast<std::size_t>(i) * static_cast<std::size_t>(st.m1) + static_cast<std::size_t>(j)] = s;
        }
}

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

SolutionField evolve(const OperatorCoefficients& coeffs, const std::vector<double>& initial, const SpaceTimeGrid& grid,
                     TimeScheme scheme, std::uint64_t seed) {
    require(grid.domain().n() == 1, "evolve: the finite-difference path supports one cross-section dimension");
    require(initial.size() == grid.spatial_size(), "evolve: initial data size does not match the grid");
    const CoefficientReport check = validate_coefficients(coeffs, grid);
    if (!check.pass)
        fail(ErrorCategory::Precondition, "evolve: coefficients violate their bounds at node " +
                                              std::to_string(check.first_violation->node) + ": " + check.first_violation->reason);

    const Stencil st = assemble(coeffs, grid);
    const auto n = static_cast<lapack_int>(st.size());
    const lapack_int kl = st.m1 + 1;
    const lapack_int ku = st.m1 + 1;
    const lapack_int ldab = 2 * kl + ku + 1;
    const double theta = scheme == TimeScheme::ImplicitEuler ? 1.0 : 0.5;
    const double tau = grid.tau();

    // A = I - theta tau L_h in LAPACK general band storage (column-major).
    std::vector<double> ab(static_cast<std::size_t>(ldab) * static_cast<std::size_t>(n), 0.0);
    const auto band = [&](lapack_int row, lapack_int col) -> double& {
        return ab[static_cast<std::size_t>(col) * static_cast<std::size_t>(ldab) + static_cast<std::size_t>(kl + ku + row - col)];
    };
    const lapack_int m1 = st.m1;
    for (lapack_int i = 0; i < st.m0; ++i)
        for (lapack_int j = 0; j < m1; ++j) {
            const lapack_int p = i * m1 + j;
            const auto& row = st.rows[static_cast<std::size_t>(p)];
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const lapack_int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= st.m0 || jj < 0 || jj >= m1) continue;
                    const lapack_int q = ii * m1 + jj;
                    band(p, q) -= theta * tau * row[static_cast<std::size_t>((di + 1) * 3 + (dj + 1))];
                }
            band(p, p) += 1.0;
        }
    std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
    const std::vector<double> ab_original = ab;
    lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, kl, ku, ab.data(), ldab, ipiv.data());
    if (info != 0) fail(ErrorCategory::Numerical, "evolve: singular step matrix (dgbtrf info=" + std::to_string(info) + ")");

    const auto band_apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        // y = A x from the unfactored band copy
        std::fill(y.begin(), y.end(), 0.0);
        for (lapack_int col = 0; col < n; ++col) {
            const lapack_int lo = std::max<lapack_int>(0, col - ku);
            const lapack_int hi = std::min<lapack_int>(n - 1, col + kl);
            for (lapack_int row = lo; row <= hi; ++row)
                y[static_cast<std::size_t>(row)] +=
                    ab_original[static_cast<std::size_t>(col) * static_cast<std::size_t>(ldab) + static_cast<std::size_t>(kl + ku + row - col)] *
                    x[static_cast<std::size_t>(col)];
        }
    };

    SolutionField out{SampledField(grid), seed, scheme, coeffs.name, 0.0};
    SampledField& f = out.field;
    const int n0 = grid.n0(), n1 = grid.n_cross(0);

    std::vector<double> u(static_cast<std::size_t>(n));
    for (int i = 1; i < n0 - 1; ++i)
        for (int j = 1; j < n1 - 1; ++j)
            u[static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(m1) + static_cast<std::size_t>(j - 1)] =
                initial[static_cast<std::size_t>(i) * static_cast<std::size_t>(n1) + static_cast<std::size_t>(j)];
    const auto store = [&](int k) {
        for (int i = 1; i < n0 - 1; ++i)
            for (int j = 1; j < n1 - 1; ++j)
                f.at(k, i, j) = u[static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(m1) + static_cast<std::size_t>(j - 1)];
    };
    store(0);

    std::vector<double> rhs(u.size()), lu(u.size()), check_vec(u.size());
    for (int k = 1; k < grid.nt(); ++k) {
        if (scheme == TimeScheme::ImplicitEuler) {
            rhs = u;
        } else {
            apply(st, u, lu);
            for (std::size_t p = 0; p < u.size(); ++p) rhs[p] = u[p] + 0.5 * tau * lu[p];
        }
        std::vector<double> x = rhs;
        info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, kl, ku, 1, ab.data(), ldab, ipiv.data(), x.data(), n);
        if (info != 0) fail(ErrorCategory::Numerical, "evolve: band solve failed at step " + std::to_string(k));
        const double bnorm = inf_norm(rhs);
        if (bnorm > 0.0) {
            band_apply(x, check_vec);
            for (std::size_t p = 0; p < u.size(); ++p) check_vec[p] -= rhs[p];
            const double rel = inf_norm(check_vec) / bnorm;
            out.max_relative_residual = std::max(out.max_relative_residual, rel);
            if (!(rel <= 1e-12))
                fail(ErrorCategory::Numerical, "evolve: linear solve residual " + std::to_string(rel) + " at step " + std::to_string(k));
        }
        u = std::move(x);
        store(k);
    }
    return out;
}

std::vector<double> seeded_bump(const SpaceTimeGrid& grid, std::uint64_t seed) {
    SeededRng rng(seed);
    const double center = rng.uniform(-1.0, 1.0);
    const double width = rng.uniform(0.4, 0.8);
    const double amp = rng.uniform(0.5, 1.5);
    const double b2 = rng.uniform(-0.5, 0.5);
    const double b3 = rng.uniform(-0.5, 0.5);
    const double len = grid.domain().length(0);
    std::vector<double> v(grid.spatial_size(), 0.0);
    const int n1 = grid.n_cross(0);
    for (int i = 1; i < grid.n0() - 1; ++i)
        for (int j = 1; j < n1 - 1; ++j) {
            const double x0 = grid.x0(i);
            const double s = M_PI * grid.cross(0, j) / len;
            const double g = amp * std::exp(-(x0 - center) * (x0 - center) / (width * width));
            v[static_cast<std::size_t>(i) * static_cast<std::size_t>(n1) + static_cast<std::size_t>(j)] =
                g * (std::sin(s) + b2 * std::sin(2.0 * s) + b3 * std::sin(3.0 * s));
        }
    return v;
}

std::vector<SampledField> discrete_gradient(const SampledField& field) {
    const SpaceTimeGrid& g = field.grid;
    const int dim = g.domain().n() + 1;
    std::vector<SampledField> out(static_cast<std::size_t>(dim), SampledField(g));
    const int n0 = g.n0(), n1 = g.n_cross(0), n2 = field.n2();
    const auto diff = [](auto&& value, int idx, int count, double h) {
        if (idx == 0) return (-3.0 * value(0) + 4.0 * value(1) - value(2)) / (2.0 * h);
        if (idx == count - 1) return (3.0 * value(count - 1) - 4.0 * value(count - 2) + value(count - 3)) / (2.0 * h);
        return (value(idx + 1) - value(idx - 1)) / (2.0 * h);
    };
    for (int k = 0; k < g.nt(); ++k)
        for (int i = 0; i < n0; ++i)
            for (int j = 0; j < n1; ++j)
                for (int l = 0; l < n2; ++l) {
                    out[0].at(k, i, j, l) = diff([&](int a) { return field.at(k, a, j, l); }, i, n0, g.h0());
                    out[1].at(k, i, j, l) = diff([&](int a) { return field.at(k, i, a, l); }, j, n1, g.h(0));
                    if (dim == 3) out[2].at(k, i, j, l) = diff([&](int a) { return field.at(k, i, j, a); }, l, n2, g.h(1));
                }
    return out;
}

namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
    static_assert(sizeof(T) == 8);
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8)) fail(ErrorCategory::Io, "read_field_binary: truncated file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    T v;
    std::memcpy(&v, &bits, 8);
    return v;
}

} // namespace

void write_field_binary(const std::string& path, const SolutionField& f) {
    const SpaceTimeGrid& g = f.grid();
    require(g.domain().n() == 1, "write_field_binary: only one cross-section dimension is supported");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCategory::Io, "cannot open '" + path + "' for writing");
    put_le<std::uint64_t>(os, static_cast<std::uint64_t>(g.nt()));
    put_le<std::uint64_t>(os, static_cast<std::uint64_t>(g.n0()));
    put_le<std::uint64_t>(os, static_cast<std::uint64_t>(g.n_cross(0)));
    put_le<double>(os, g.tau());
    put_le<double>(os, g.h0());
    put_le<double>(os, g.h(0));
    put_le<double>(os, g.time_extent());
    put_le<double>(os, g.domain().truncation());
    put_le<std::uint64_t>(os, f.seed);
    for (double v : f.field.values) put_le<double>(os, v);
    if (!os) fail(ErrorCategory::Io, "write to '" + path + "' failed");
}

SolutionField read_field_binary(const std::string& path, const StripDomain& domain) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCategory::Io, "cannot open '" + path + "'");
    const auto nt = get_le<std::uint64_t>(is);
    const auto n0 = get_le<std::uint64_t>(is);
    const auto n1 = get_le<std::uint64_t>(is);
    (void)get_le<double>(is);
    (void)get_le<double>(is);
    (void)get_le<double>(is);
    const auto t_extent = get_le<double>(is);
    const auto x_trunc = get_le<double>(is);
    const auto seed = get_le<std::uint64_t>(is);
    require(domain.n() == 1, "read_field_binary: only one cross-section dimension is supported");
    require(x_trunc == domain.truncation(), "read_field_binary: truncation X does not match the domain");
    const SpaceTimeGrid g(domain, t_extent, static_cast<int>(nt - 1), static_cast<int>(n0 - 1),
                          {static_cast<int>(n1 - 1), 0});
    std::vector<double> values(nt * n0 * n1);
    for (double& v : values) v = get_le<double>(is);
    SolutionField f{SampledField(g, std::move(values)), seed, TimeScheme::ImplicitEuler, "", 0.0};
    return f;
}

} // namespace ancient
