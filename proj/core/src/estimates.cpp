#include "ancient/estimates.hpp"
#include "ancient/error.hpp"
#include "ancient/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ancient {

namespace {

double smoothstep(double z) { return z * z * (3.0 - 2.0 * z); }
double smoothstep_slope(double z) { return 6.0 * z * (1.0 - z); }

} // namespace

double CutoffProfile::value(double t, double x0) const {
    const double a = std::abs(x0);
    double s = 1.0;
    if (a >= R) s = 0.0;
    else if (a > r) s = 1.0 - smoothstep((a - r) / (R - r));
    double q = 1.0;
    if (t <= -R * R) q = 0.0;
    else if (t < -r * r) q = smoothstep((t + R * R) / (R * R - r * r));
    if (t > 0.0) q = 0.0;
    return s * q;
}

double CutoffProfile::d0(double t, double x0) const {
    const double a = std::abs(x0);
    if (a <= r || a >= R) return 0.0;
    const double ds = -smoothstep_slope((a - r) / (R - r)) / (R - r);
    const double sign = x0 < 0.0 ? -1.0 : 1.0;
    return sign * ds * value(t, 0.0);
}

double CutoffProfile::dt(double t, double x0) const {
    if (t <= -R * R || t >= -r * r) return 0.0;
    const double dq = smoothstep_slope((t + R * R) / (R * R - r * r)) / (R * R - r * r);
    return dq * value(0.0, x0);
}

CutoffProfile cutoff_profile(double r, double R) {
    require(r > 0.0 && r < R, "cutoff_profile: need 0 < r < R");
    CutoffProfile p;
    p.r = r;
    p.R = R;
    p.d0_max = 1.5 / (R - r);
    p.dt_max = 1.5 / (R * R - r * r);
    p.sampled_d0_max = p.d0_max;
    p.sampled_dt_max = p.dt_max;
    return p;
}

CutoffProfile cutoff_profile(double r, double R, const SpaceTimeGrid& grid) {
    CutoffProfile p = cutoff_profile(r, R);
    if (R - r < 4.0 * grid.h0() * (1.0 - 1e-12))
        fail(ErrorCategory::Precondition, "cutoff_profile: R - r is smaller than 4 grid cells");
    p.sampled_d0_max = 0.0;
    p.sampled_dt_max = 0.0;
    for (int k = 0; k < grid.nt(); ++k)
        for (int i = 0; i < grid.n0(); ++i) {
            p.sampled_d0_max = std::max(p.sampled_d0_max, std::abs(p.d0(grid.time(k), grid.x0(i))));
            p.sampled_dt_max = std::max(p.sampled_dt_max, std::abs(p.dt(grid.time(k), grid.x0(i))));
        }
    return p;
}

double epsilon0(double lambda, double mu1) {
    require(lambda > 0.0 && mu1 > 0.0, "epsilon0: lambda and mu1 must be positive");
    return lambda * lambda * mu1 / (4.0 * (lambda + 1.0));
}

EstimateConstants estimate_constants(double lambda, double Lambda, double mu1) {
    require(lambda > 0.0 && Lambda >= lambda, "estimate_constants: need 0 < lambda <= Lambda");
    require(mu1 > 0.0, "estimate_constants: mu1 must be positive");
    EstimateConstants c;
    c.lambda = lambda;
    c.Lambda = Lambda;
    c.mu1 = mu1;
    c.energy = 4.0 * Lambda * Lambda / lambda;
    // (lambda/2) X <= 2 C Y + 2 Z, |d0 phi| <= 2/(R-r), |phi dt phi| <= 2/(R-r)^2
    c.gradient = (16.0 * c.energy + 8.0) / lambda;
    c.l2 = c.gradient / mu1;
    c.eps0 = epsilon0(lambda, mu1);
    return c;
}

EstimateConstants estimate_constants(const OperatorCoefficients& op, const StripDomain& domain) {
    return estimate_constants(op.lambda_ell, op.Lambda_ell, domain.first_eigenvalue());
}

double EstimateReport::detail(const std::string& key) const {
    for (const auto& [k, v] : details)
        if (k == key) return v;
    fail(ErrorCategory::Precondition, "EstimateReport: no detail '" + key + "'");
}

namespace {

EstimateReport make_estimate_report(const std::string& check, const std::string& source, double lhs, double annulus,
                            double constant, double r, double R, double sr, double sR) {
    EstimateReport rep;
    rep.check = check;
    rep.source = source;
    rep.r = r;
    rep.R = R;
    rep.snapped_r = sr;
    rep.snapped_R = sR;
    rep.constant_used = constant;
    const double gap2 = (sR - sr) * (sR - sr);
    rep.lhs = lhs;
    rep.rhs = constant / gap2 * annulus;
    rep.pass = lhs <= rep.rhs;
    rep.vacuous = annulus == 0.0 && lhs == 0.0;
    rep.empirical_constant = annulus > 0.0 ? lhs * gap2 / annulus : 0.0;
    rep.details.emplace_back("annulus", annulus);
    if (!rep.pass)
        rep.message = "violated: lhs " + std::to_string(lhs) + " > C/(R-r)^2 annulus " + std::to_string(rep.rhs);
    return rep;
}

void require_field_window(const SpaceTimeGrid& g, double R, const char* who) {
    const double X = g.domain().truncation();
    if (R * R > g.time_extent() * (1.0 + 1e-12))
        fail(ErrorCategory::Precondition, std::string(who) + ": window-too-small: R^2 exceeds T");
    if (R + 1.0 > X * (1.0 + 1e-12))
        fail(ErrorCategory::Precondition, std::string(who) + ": window-too-small: need R + 1 <= X");
}

double field_gradient_energy(const SampledField& f, double r) {
    const auto grad = discrete_gradient(f);
    double s = 0.0;
    for (const auto& g : grad) s += inner_product_quadrature(g, g, r);
    return s;
}

// Simpson over the snapped Q_R of `grid` of fn(k, i, j, l).
template <typename F>
double window_integral(const SpaceTimeGrid& g, const SnappedCylinder& q, F&& fn) {
    const auto wt = simpson_weights(q.time_steps, g.tau());
    const auto wx = simpson_weights(2 * q.half_cells, g.h0());
    const auto w1 = simpson_weights(g.cells_cross(0), g.h(0));
    const std::vector<double> w2 = g.domain().n() == 2 ? simpson_weights(g.cells_cross(1), g.h(1)) : std::vector<double>{1.0};
    const int k0 = g.time_steps() - q.time_steps;
    const int i0 = g.cells_x0() / 2 - q.half_cells;
    double total = 0.0;
    for (int a = 0; a <= q.time_steps; ++a) {
        double slab = 0.0;
        for (int b = 0; b <= 2 * q.half_cells; ++b) {
            double line = 0.0;
            for (int j = 0; j < g.n_cross(0); ++j)
                for (std::size_t l = 0; l < w2.size(); ++l)
                    line += w1[static_cast<std::size_t>(j)] * w2[l] * fn(k0 + a, i0 + b, j, static_cast<int>(l));
            slab += wx[static_cast<std::size_t>(b)] * line;
        }
        total += wt[static_cast<std::size_t>(a)] * slab;
    }
    return total;
}

// Spatial Simpson over |x0| <= R at time level k.
template <typename F>
double slice_integral(const SpaceTimeGrid& g, const SnappedCylinder& q, int k, F&& fn) {
    const auto wx = simpson_weights(2 * q.half_cells, g.h0());
    const auto w1 = simpson_weights(g.cells_cross(0), g.h(0));
    const int i0 = g.cells_x0() / 2 - q.half_cells;
    double total = 0.0;
    for (int b = 0; b <= 2 * q.half_cells; ++b) {
        double line = 0.0;
        for (int j = 0; j < g.n_cross(0); ++j) line += w1[static_cast<std::size_t>(j)] * fn(k, i0 + b, j);
        total += wx[static_cast<std::size_t>(b)] * line;
    }
    return total;
}

} // namespace

EstimateReport reverse_poincare_check(const SolutionSum& u, double r, double R, const EstimateConstants& constants) {
    require(r > 0.0 && r < R, "reverse_poincare_check: need 0 < r < R");
    const double lhs = gradient_energy_closed(u, r);
    const double annulus = annulus_energy_closed(u, r, R);
    EstimateReport rep = make_estimate_report("reverse-poincare", "closed-form", lhs, annulus, constants.gradient, r, R, r, R);
    rep.grid = "exact";
    rep.details.emplace_back("C_energy", constants.energy);
    rep.details.emplace_back("eps0", constants.eps0);
    return rep;
}

EstimateReport reverse_poincare_check(const SolutionField& u, const OperatorCoefficients& op, double r, double R) {
    require(r > 0.0 && r < R, "reverse_poincare_check: need 0 < r < R");
    const SpaceTimeGrid& g = u.grid();
    const SnappedCylinder qr = snap_cylinder(g, r);
    const SnappedCylinder qR = snap_cylinder(g, R);
    require_field_window(g, qR.r, "reverse_poincare_check");
    const EstimateConstants c = estimate_constants(op, g.domain());
    const double lhs = field_gradient_energy(u.field, r);
    const double annulus = annulus_energy_quadrature(u.field, r, R);
    EstimateReport rep = make_estimate_report("reverse-poincare", "field", lhs, annulus, c.gradient, r, R, qr.r, qR.r);
    rep.grid = g.describe();
    rep.details.emplace_back("C_energy", c.energy);
    rep.details.emplace_back("eps0", c.eps0);
    rep.details.emplace_back("seed", static_cast<double>(u.seed));
    return rep;
}

EstimateReport l2_reverse_check(const SolutionSum& u, double r, double R, const EstimateConstants& constants) {
    require(r > 0.0 && r < R, "l2_reverse_check: need 0 < r < R");
    const double lhs = energy_closed(u, r);
    const double annulus = annulus_energy_closed(u, r, R);
    EstimateReport rep = make_estimate_report("l2-reverse", "closed-form", lhs, annulus, constants.l2, r, R, r, R);
    rep.grid = "exact";
    // (1 + (R-r)^2/C) I(r) <= I(R) is the same inequality rearranged
    rep.details.emplace_back("growth_factor_bound", 1.0 + (R - r) * (R - r) / constants.l2);
    rep.details.emplace_back("mu1", constants.mu1);
    return rep;
}

EstimateReport l2_reverse_check(const SolutionField& u, const OperatorCoefficients& op, double r, double R) {
    require(r > 0.0 && r < R, "l2_reverse_check: need 0 < r < R");
    const SpaceTimeGrid& g = u.grid();
    const SnappedCylinder qr = snap_cylinder(g, r);
    const SnappedCylinder qR = snap_cylinder(g, R);
    require_field_window(g, qR.r, "l2_reverse_check");
    const EstimateConstants c = estimate_constants(op, g.domain());
    const double lhs = inner_product_quadrature(u.field, u.field, qr);
    const double annulus = annulus_energy_quadrature(u.field, r, R);
    EstimateReport rep = make_estimate_report("l2-reverse", "field", lhs, annulus, c.l2, r, R, qr.r, qR.r);
    rep.grid = g.describe();
    rep.details.emplace_back("growth_factor_bound", 1.0 + (qR.r - qr.r) * (qR.r - qr.r) / c.l2);
    rep.details.emplace_back("mu1", c.mu1);
    rep.details.emplace_back("seed", static_cast<double>(u.seed));
    return rep;
}

EstimateReport slice_poincare_check(const SolutionSum& u, const StripDomain& domain, double r, double R, int cells) {
    const CutoffProfile phi = cutoff_profile(r, R);
    require(cells >= 2 && cells % 2 == 0, "slice_poincare_check: cells must be even and >= 2");
    const double mu1 = domain.first_eigenvalue();

    // Terms grouped by cross-section mode: modes are L^2-orthonormal on each slice.
    std::map<std::vector<int>, std::vector<const SeparatedSolution*>> groups;
    for (const auto& term : u) groups[term.mode.k].push_back(&term);

    const double T = R * R;
    const auto wt = simpson_weights(cells, T / cells);
    const auto wx = simpson_weights(cells, 2.0 * R / cells);
    double lhs = 0.0, grad = 0.0;
    for (int a = 0; a <= cells; ++a) {
        const double t = -T + a * (T / cells);
        double row_l = 0.0, row_g = 0.0;
        for (int b = 0; b <= cells; ++b) {
            const double x0 = -R + b * (2.0 * R / cells);
            const double p = phi.value(t, x0);
            if (p == 0.0) continue;
            double sl = 0.0, sg = 0.0;
            for (const auto& [k, terms] : groups) {
                double v = 0.0;
                for (const auto* s : terms) v += s->coeff * std::exp(s->alpha * x0 + s->rho * t);
                sl += v * v;
                sg += terms.front()->mode.mu * v * v;
            }
            row_l += wx[static_cast<std::size_t>(b)] * p * p * sl;
            row_g += wx[static_cast<std::size_t>(b)] * p * p * sg;
        }
        lhs += wt[static_cast<std::size_t>(a)] * row_l;
        grad += wt[static_cast<std::size_t>(a)] * row_g;
    }
    EstimateReport rep;
    rep.check = "slice-poincare";
    rep.source = "closed-form";
    rep.r = rep.snapped_r = r;
    rep.R = rep.snapped_R = R;
    rep.grid = "cells=" + std::to_string(cells);
    rep.lhs = lhs;
    rep.rhs = grad / mu1;
    rep.constant_used = 1.0 / mu1;
    rep.vacuous = lhs == 0.0 && grad == 0.0;
    rep.pass = lhs <= rep.rhs * (1.0 + 1e-12);
    rep.empirical_constant = grad > 0.0 ? lhs / grad : 0.0;
    rep.details.emplace_back("sharpness", rep.rhs > 0.0 ? lhs / rep.rhs : 0.0);
    rep.details.emplace_back("mu1", mu1);
    return rep;
}

EstimateReport slice_poincare_check(const SolutionField& u, double r, double R) {
    const SpaceTimeGrid& g = u.grid();
    require(g.domain().n() == 1, "slice_poincare_check: field path supports n = 1");
    const CutoffProfile phi = cutoff_profile(r, R, g);
    const SnappedCylinder qR = snap_cylinder(g, R);
    const double mu1 = g.domain().first_eigenvalue();
    const auto grad = discrete_gradient(u.field);
    const SampledField& d1 = grad[1];
    const double lhs = window_integral(g, qR, [&](int k, int i, int j, int) {
        const double p = phi.value(g.time(k), g.x0(i));
        const double v = u.field.at(k, i, j);
        return p * p * v * v;
    });
    const double gsum = window_integral(g, qR, [&](int k, int i, int j, int) {
        const double p = phi.value(g.time(k), g.x0(i));
        const double v = d1.at(k, i, j);
        return p * p * v * v;
    });
    const double hl = M_PI * g.h(0) / g.domain().length(0);
    const double allowance = 1.0 + 2.0 * hl * hl;
    EstimateReport rep;
    rep.check = "slice-poincare";
    rep.source = "field";
    rep.r = r;
    rep.R = R;
    rep.snapped_r = snap_cylinder(g, r).r;
    rep.snapped_R = qR.r;
    rep.grid = g.describe();
    rep.lhs = lhs;
    rep.rhs = gsum / mu1;
    rep.constant_used = allowance / mu1;
    rep.vacuous = lhs == 0.0;
    rep.pass = lhs <= allowance * rep.rhs;
    rep.empirical_constant = gsum > 0.0 ? lhs / gsum : 0.0;
    rep.details.emplace_back("sharpness", rep.rhs > 0.0 ? lhs / rep.rhs : 0.0);
    rep.details.emplace_back("allowance", allowance);
    rep.details.emplace_back("mu1", mu1);
    return rep;
}

EstimateReport energy_inequality_check(const SolutionField& u, const OperatorCoefficients& op, double r, double R) {
    const SpaceTimeGrid& g = u.grid();
    require(g.domain().n() == 1, "energy_inequality_check: field path supports n = 1");
    const CutoffProfile phi = cutoff_profile(r, R, g);
    const SnappedCylinder qR = snap_cylinder(g, R);
    require_field_window(g, qR.r, "energy_inequality_check");
    const double C = 4.0 * op.Lambda_ell * op.Lambda_ell / op.lambda_ell;
    const auto grad = discrete_gradient(u.field);

    const double top = slice_integral(g, qR, g.nt() - 1, [&](int k, int i, int j) {
        const double p = phi.value(g.time(k), g.x0(i));
        const double v = u.field.at(k, i, j);
        return p * p * v * v;
    });
    const double dirichlet = window_integral(g, qR, [&](int k, int i, int j, int) {
        const double p = phi.value(g.time(k), g.x0(i));
        const double a = grad[0].at(k, i, j), b = grad[1].at(k, i, j);
        return p * p * (a * a + b * b);
    });
    const double y = window_integral(g, qR, [&](int k, int i, int j, int) {
        const double d = phi.d0(g.time(k), g.x0(i));
        const double v = u.field.at(k, i, j);
        return v * v * d * d;
    });
    const double z = window_integral(g, qR, [&](int k, int i, int j, int) {
        const double t = g.time(k), x0 = g.x0(i);
        const double v = u.field.at(k, i, j);
        return v * v * std::abs(phi.value(t, x0) * phi.dt(t, x0));
    });
    EstimateReport rep;
    rep.check = "energy-inequality";
    rep.source = "field";
    rep.r = r;
    rep.R = R;
    rep.snapped_r = snap_cylinder(g, r).r;
    rep.snapped_R = qR.r;
    rep.grid = g.describe();
    rep.lhs = top + 0.5 * op.lambda_ell * dirichlet;
    rep.rhs = C * y + 2.0 * z;
    rep.constant_used = C;
    rep.pass = rep.lhs <= rep.rhs;
    rep.vacuous = rep.rhs == 0.0 && rep.lhs == 0.0;
    rep.empirical_constant = y > 0.0 ? std::max(0.0, rep.lhs - 2.0 * z) / y : 0.0;
    rep.details = {{"top_slice", top}, {"dirichlet", dirichlet}, {"d0_term", y}, {"dt_term", z}};
    return rep;
}

double log_energy(const SolutionSum& u, double r) {
    require(r > 0.0, "log_energy: radius must be positive");
    std::vector<double> logs;
    std::vector<double> signs;
    for (const auto& a : u)
        for (const auto& b : u) {
            if (a.mode.k != b.mode.k || a.coeff == 0.0 || b.coeff == 0.0) continue;
            logs.push_back(std::log(std::abs(a.coeff)) + std::log(std::abs(b.coeff)) +
                           log_time_factor(a.rho + b.rho, r * r) + log_space_factor(a.alpha + b.alpha, r));
            signs.push_back((a.coeff > 0) == (b.coeff > 0) ? 1.0 : -1.0);
        }
    if (logs.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(logs.begin(), logs.end());
    double s = 0.0;
    for (std::size_t i = 0; i < logs.size(); ++i) s += signs[i] * std::exp(logs[i] - m);
    if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
    return m + std::log(s);
}

double l2_empirical_constant(const SolutionSum& u, double r, double R) {
    require(r > 0.0 && r < R, "l2_empirical_constant: need 0 < r < R");
    const double a = log_energy(u, r);
    if (!std::isfinite(a)) return 0.0;
    const double b = log_energy(u, R);
    const double growth = std::expm1(b - a);
    if (!(growth > 0.0)) return std::numeric_limits<double>::infinity();
    return (R - r) * (R - r) / growth;
}

double growth_constant(const SolutionSum& u, double r, int K) {
    require(r > 0.0 && K >= 1, "growth_constant: need r > 0 and K >= 1");
    if (!std::isfinite(log_energy(u, r))) return 0.0;
    // The constant must serve every pair, not only the ladder gaps.
    double C = 0.0;
    for (int a = 0; a <= 32; ++a) {
        const double base = r + 0.25 * a;
        for (int b = 0; b <= 80; ++b) C = std::max(C, l2_empirical_constant(u, base, base + 1e-3 * std::pow(1e4, b / 80.0)));
    }
    for (int it = 0; it < 200; ++it) {
        const double r0 = std::sqrt(C * (M_E - 1.0));
        double s = 0.0;
        for (int k = 1; k <= K; ++k) s = std::max(s, l2_empirical_constant(u, r + (k - 1) * r0, r + k * r0));
        if (s <= C * (1.0 + 1e-12)) return C;
        C = s;
    }
    fail(ErrorCategory::Numerical, "growth_constant: fixed-point iteration did not settle");
}

GrowthIterationReport growth_iteration_check(const SolutionSum& u, double r, double r0, int K) {
    require(r > 0.0 && K >= 1, "growth_iteration_check: need r > 0 and K >= 1");
    GrowthIterationReport rep;
    rep.r = r;
    rep.K = K;
    const double base = log_energy(u, r);
    if (!std::isfinite(base)) {
        rep.vacuous = true;
        rep.pass = true;
        return rep;
    }
    rep.constant = growth_constant(u, r, K);
    rep.r0 = r0 > 0.0 ? r0 : std::sqrt(rep.constant * (M_E - 1.0));
    rep.min_ratio = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= K; ++k) {
        const double ratio = std::exp(log_energy(u, r + k * rep.r0) - k - base);
        rep.ratios.push_back(ratio);
        rep.min_ratio = std::min(rep.min_ratio, ratio);
    }
    rep.pass = rep.min_ratio >= 1.0 - 1e-12;
    return rep;
}

GrowthExponent growth_exponent(const SolutionSum& u, const std::vector<double>& R_list) {
    require(R_list.size() >= 3, "growth_exponent: need at least 3 radii");
    for (std::size_t i = 1; i < R_list.size(); ++i)
        require(R_list[i] > R_list[i - 1], "growth_exponent: radii must be increasing");
    GrowthExponent g;
    const std::size_t start = R_list.size() / 2;
    for (std::size_t i = start; i < R_list.size(); ++i) {
        g.radii.push_back(R_list[i]);
        g.log_energy.push_back(log_energy(u, R_list[i]));
    }
    if (!std::isfinite(g.log_energy.front())) {
        g.zero = true;
        g.slope = -std::numeric_limits<double>::infinity();
        return g;
    }
    const double n = static_cast<double>(g.radii.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < g.radii.size(); ++i) {
        sx += g.radii[i];
        sy += g.log_energy[i];
        sxx += g.radii[i] * g.radii[i];
        sxy += g.radii[i] * g.log_energy[i];
    }
    g.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    g.intercept = (sy - g.slope * sx) / n;
    for (std::size_t i = 0; i < g.radii.size(); ++i)
        g.residual = std::max(g.residual, std::abs(g.log_energy[i] - g.intercept - g.slope * g.radii[i]));
    return g;
}

LiouvilleProbe polynomial_liouville_probe(const SolutionSum& u, double d, double r, int K, double r0, double margin,
                                          long k_max) {
    require(d >= 0.0 && r > 0.0 && K >= 1, "polynomial_liouville_probe: need d >= 0, r > 0, K >= 1");
    require(margin > 0.0, "polynomial_liouville_probe: margin must be positive");
    LiouvilleProbe p;
    p.d = d;
    p.r = r;
    p.K = K;
    p.margin = margin;
    const double base = log_energy(u, r);
    if (!std::isfinite(base)) {
        p.zero = true;
        return p;
    }
    p.r0 = r0 > 0.0 ? r0 : std::sqrt(growth_constant(u, r, K) * (M_E - 1.0));
    p.log_fitted_constant = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= K; ++k) {
        const double R = r + k * p.r0;
        p.log_fitted_constant = std::max(p.log_fitted_constant, log_energy(u, R) - 2.0 * d * std::log(R));
    }
    const double lm = std::log(margin);
    for (long k = 1; k <= k_max; ++k) {
        const double lr = base + static_cast<double>(k) - p.log_fitted_constant - 2.0 * d * std::log(r + k * p.r0);
        if (lr > lm) {
            p.certificate = true;
            p.certificate_k = k;
            p.log_ratio = lr;
            break;
        }
    }
    for (long k = 1; k <= k_max; ++k)
        if (static_cast<double>(k) >= 2.0 * d * std::log(r + k * p.r0)) {
            p.model_k = k;
            break;
        }
    return p;
}

EstimateReport mean_value_check(const PointFunction& u, const StripDomain& domain, double t, const SpacePoint& x,
                                double r, const MeanValueOptions& opt) {
    require(r > 0.0, "mean_value_check: radius must be positive");
    require(t <= 0.0, "mean_value_check: center must satisfy t <= 0");
    require(opt.radial_cells >= 2 && opt.radial_cells % 2 == 0 && opt.time_cells >= 2 && opt.time_cells % 2 == 0 &&
                opt.angular_cells >= 4 && opt.angular_cells % 2 == 0,
            "mean_value_check: cell counts must be even");
    const int n = domain.n();
    const auto value = [&](double s, const SpacePoint& y) {
        if (opt.zero_extend && (s > 0.0 || !domain.inside(y))) return 0.0;
        return u(s, y);
    };
    const auto wt = simpson_weights(opt.time_cells, r * r / opt.time_cells);
    const auto wr = simpson_weights(opt.radial_cells, r / opt.radial_cells);
    const int na = opt.angular_cells;
    const double dphi = 2.0 * M_PI / na;
    const auto wth = simpson_weights(na / 2, M_PI / (na / 2));

    double integral = 0.0;
    for (int a = 0; a <= opt.time_cells; ++a) {
        const double s = t - r * r + a * (r * r / opt.time_cells);
        double ball = 0.0;
        for (int b = 1; b <= opt.radial_cells; ++b) {
            const double rho = b * (r / opt.radial_cells);
            double shell = 0.0;
            if (n == 1) {
                for (int c = 0; c < na; ++c) {
                    SpacePoint y = x;
                    y.x0 += rho * std::cos(c * dphi);
                    y.cross[0] += rho * std::sin(c * dphi);
                    const double v = value(s, y);
                    shell += dphi * v * v;
                }
                shell *= rho;
            } else {
                for (int e = 0; e <= na / 2; ++e) {
                    const double th = e * (M_PI / (na / 2));
                    double ring = 0.0;
                    for (int c = 0; c < na; ++c) {
                        SpacePoint y = x;
                        y.x0 += rho * std::cos(th);
                        y.cross[0] += rho * std::sin(th) * std::cos(c * dphi);
                        y.cross[1] += rho * std::sin(th) * std::sin(c * dphi);
                        const double v = value(s, y);
                        ring += dphi * v * v;
                    }
                    shell += wth[static_cast<std::size_t>(e)] * std::sin(th) * ring;
                }
                shell *= rho * rho;
            }
            ball += wr[static_cast<std::size_t>(b)] * shell;
        }
        integral += wt[static_cast<std::size_t>(a)] * ball;
    }
    const double center = value(t, x);
    const double scale = std::pow(r, n + 3);
    EstimateReport rep;
    rep.check = "mean-value";
    rep.source = "closed-form";
    rep.r = rep.snapped_r = r;
    rep.grid = "time=" + std::to_string(opt.time_cells) + " radial=" + std::to_string(opt.radial_cells) +
               " angular=" + std::to_string(opt.angular_cells);
    rep.lhs = center * center;
    rep.rhs = opt.C_mv / scale * integral;
    rep.constant_used = opt.C_mv;
    rep.pass = rep.lhs <= rep.rhs;
    rep.vacuous = integral == 0.0 && rep.lhs == 0.0;
    rep.empirical_constant = integral > 0.0 ? rep.lhs * scale / integral : 0.0;
    rep.details = {{"integral", integral}, {"volume", ParabolicBall(t, x, r).volume(n)}, {"t", t},
                   {"x0", x.x0}, {"x1", x.cross[0]}};
    if (n == 2) rep.details.emplace_back("x2", x.cross[1]);
    return rep;
}

EstimateReport mean_value_check(const SolutionSum& u, const StripDomain& domain, double t, const SpacePoint& x,
                                double r, const MeanValueOptions& opt) {
    return mean_value_check([&](double s, const SpacePoint& y) { return evaluate(u, s, y, domain); }, domain, t, x, r,
                            opt);
}

MeanValueCalibration calibrate_mean_value(int n) {
    require(n == 1 || n == 2, "calibrate_mean_value: n must be 1 or 2");
    // Whole space: no zero extension, the strip only fixes the dimension.
    const StripDomain space(std::vector<double>(static_cast<std::size_t>(n), 1.0), 10.0);
    MeanValueOptions opt;
    opt.zero_extend = false;
    opt.C_mv = 1.0;
    if (n == 2) opt.angular_cells = 48;
    MeanValueCalibration cal;
    const double dim = n + 1;
    const SpacePoint origin;
    const auto consider = [&](const PointFunction& f) {
        const EstimateReport rep = mean_value_check(f, space, 0.0, origin, 1.0, opt);
        cal.max_empirical = std::max(cal.max_empirical, rep.empirical_constant);
        ++cal.samples;
    };
    consider([](double, const SpacePoint&) { return 1.0; });
    for (double beta : {0.1, 0.25, 0.5, 1.0, 2.0, 4.0})
        for (double offset : {0.0, 0.5, 1.0, 1.5, 2.0}) {
            const double s0 = -(1.0 + beta);
            consider([=](double s, const SpacePoint& y) {
                const double tau = s - s0;
                double q = (y.x0 - offset) * (y.x0 - offset);
                for (int i = 0; i < n; ++i) q += y.cross[static_cast<std::size_t>(i)] * y.cross[static_cast<std::size_t>(i)];
                return std::pow(4.0 * M_PI * tau, -dim / 2.0) * std::exp(-q / (4.0 * tau));
            });
        }
    cal.frozen = std::ceil(2.0 * cal.max_empirical * 100.0) / 100.0;
    return cal;
}

double default_mean_value_constant(int n) {
    require(n == 1 || n == 2, "default_mean_value_constant: n must be 1 or 2");
    // frozen output of calibrate_mean_value: max empirical 1/pi (n=1), 3/(4 pi) (n=2), attained by u = 1
    return n == 1 ? 0.64 : 0.48;
}

} // namespace ancient
