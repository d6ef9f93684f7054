#include "cli.hpp"

#include "ancient/cm.hpp"
#include "ancient/config.hpp"
#include "ancient/error.hpp"
#include "ancient/estimates.hpp"
#include "ancient/fd_solver.hpp"
#include "ancient/geometry.hpp"
#include "ancient/quadrature.hpp"
#include "ancient/report.hpp"
#include "ancient/solutions.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>

namespace ancient::cli {

namespace {

std::string g_timestamp_override;

std::string timestamp() {
    if (!g_timestamp_override.empty()) return g_timestamp_override;
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string num(double v) { return format_number(v); }

struct Failure {
    std::string check;
    ErrorCategory category = ErrorCategory::Invariant;
    std::string message;
};

struct Outcome {
    Json results = Json::array();
    std::optional<Failure> first;
    std::vector<std::pair<std::string, CsvTable>> tables;
    std::vector<std::pair<std::string, std::string>> files; ///< (suffix, content)
    std::vector<std::string> lines;

    bool pass() const { return !first.has_value(); }

    void check(Json j, const std::string& name, bool ok, const std::string& summary,
               ErrorCategory cat = ErrorCategory::Invariant) {
        j["name"] = name;
        j["pass"] = ok;
        results.push_back(std::move(j));
        lines.push_back(std::string(ok ? "PASS " : "FAIL ") + name + ": " + summary);
        if (!ok && !first) first = Failure{name, cat, summary};
    }

    void error(const std::string& name, const Error& e) {
        Json j;
        j["name"] = name;
        j["pass"] = false;
        j["error"] = category_name(e.category());
        j["message"] = e.what();
        results.push_back(std::move(j));
        lines.push_back("FAIL " + name + ": " + category_name(e.category()) + " error: " + e.what());
        if (!first) first = Failure{name, e.category(), e.what()};
    }
};

std::string inequality(const EstimateReport& r) {
    return r.check + (r.pass ? " holds" : " violated") + ": lhs = " + num(r.lhs) + (r.pass ? " <= " : " > ") +
           "rhs = " + num(r.rhs) + " (C = " + num(r.constant_used) + ", C_emp = " + num(r.empirical_constant) + ")";
}

void add_estimate(Outcome& o, const EstimateReport& r, const std::string& name) {
    o.check(to_json(r), name, r.pass, inequality(r));
}

Mode first_mode(const StripDomain& d) { return make_mode(d, std::vector<int>(static_cast<std::size_t>(d.n()), 1)); }

std::vector<double> alpha_list(const ExperimentConfig& c) {
    return c.experiment.alphas.empty() ? std::vector<double>{c.experiment.alpha} : c.experiment.alphas;
}

SolutionSum closed_solution(const StripDomain& d, double alpha) {
    return SolutionSum{SeparatedSolution::make(1.0, alpha, first_mode(d))};
}

std::string alpha_label(double a) { return "alpha=" + num(a); }

std::vector<std::uint64_t> seed_list(const ExperimentConfig& c) {
    return c.experiment.seeds.empty() ? std::vector<std::uint64_t>{c.seed} : c.experiment.seeds;
}

SolutionField field_solution(const ExperimentConfig& c, const SpaceTimeGrid& grid, std::uint64_t seed) {
    return evolve(c.make_operator(), seeded_bump(grid, seed), grid, c.scheme(), seed);
}

void require_laplacian(const ExperimentConfig& c) {
    if (c.op.coefficients != "laplacian")
        fail(ErrorCategory::Config, "closed-form solutions solve the heat equation; operator.coefficients must be "
                                    "laplacian for source = closed");
}

/// 2k (or `count`) probe solutions: mode-1 solutions at the listed alphas, or
/// the continuum family on [sqrt(mu1), d].
SolutionSpan probe_span(const ExperimentConfig& c, const StripDomain& d, std::size_t count) {
    if (!c.experiment.alphas.empty()) {
        std::vector<SeparatedSolution> basis;
        for (double a : c.experiment.alphas) basis.push_back(SeparatedSolution::make(1.0, a, first_mode(d)));
        return SolutionSpan(d, basis);
    }
    return build_continuum_family(d, c.experiment.d.value_or(6.0), static_cast<int>(count));
}

GramMethod gram_method(const ExperimentConfig& c) {
    return c.experiment.method == "quadrature" ? GramMethod::Quadrature : GramMethod::ClosedForm;
}

std::optional<SpaceTimeGrid> method_grid(const ExperimentConfig& c) {
    if (gram_method(c) == GramMethod::Quadrature) return c.make_grid();
    return std::nullopt;
}

// ---------------------------------------------------------------- commands

void cmd_spectrum(const ExperimentConfig& c, Outcome& o) {
    const StripDomain d = c.make_domain();
    const auto modes = box_eigenpairs(d, c.experiment.mu_max);
    Json j;
    j["mu_max"] = c.experiment.mu_max;
    j["count"] = modes.size();
    j["weyl_count"] = weyl_count(d, std::sqrt(c.experiment.mu_max));
    Json ms = Json::array();
    for (const auto& m : modes) ms.push_back(to_json(m));
    j["modes"] = ms;
    o.check(j, "modes", true, std::to_string(modes.size()) + " modes with mu <= " + num(c.experiment.mu_max));
    o.tables.emplace_back("modes", modes_csv(modes));

    // finite-difference oracle on the first cross-section axis
    const double L = d.length(0);
    const int nodes = c.experiment.nodes;
    const int count = c.experiment.count;
    const auto fine = fd_eigenpairs_1d(L, nodes, count);
    const auto coarse = fd_eigenpairs_1d(L, (nodes + 1) / 2, count);
    const double hf = L / (nodes - 1), hc = L / ((nodes + 1) / 2 - 1);
    CsvTable t;
    t.header = {"j", "mu_exact", "mu_fd", "relative_error", "order"};
    double worst = 0.0, min_order = INFINITY;
    Json rows = Json::array();
    for (int i = 0; i < count && i < static_cast<int>(fine.size()) && i < static_cast<int>(coarse.size()); ++i) {
        const double exact = std::pow((i + 1) * M_PI / L, 2);
        const double ef = std::abs(fine[static_cast<std::size_t>(i)].mu - exact) / exact;
        const double ec = std::abs(coarse[static_cast<std::size_t>(i)].mu - exact) / exact;
        const double order = std::log(ec / ef) / std::log(hc / hf);
        worst = std::max(worst, ef);
        min_order = std::min(min_order, order);
        rows.push_back({{"j", i + 1}, {"mu_exact", exact}, {"mu_fd", fine[static_cast<std::size_t>(i)].mu},
                        {"relative_error", ef}, {"order", order}});
        t.add({csv_cell(i + 1), csv_cell(exact), csv_cell(fine[static_cast<std::size_t>(i)].mu), csv_cell(ef),
               csv_cell(order)});
    }
    Json f;
    f["length"] = L;
    f["nodes"] = nodes;
    f["rows"] = rows;
    f["max_relative_error"] = worst;
    f["min_order"] = min_order;
    const bool ok = worst <= 1e-3 && min_order >= 1.9;
    o.check(f, "fd-oracle", ok,
            "max relative error " + num(worst) + " <= 1e-3, min order " + num(min_order) + " >= 1.9");
    o.tables.emplace_back("fd_oracle", t);
}

void cmd_solutions_build(const ExperimentConfig& c, Outcome& o) {
    const StripDomain d = c.make_domain();
    if (c.experiment.source == "field") {
        const SpaceTimeGrid grid = c.make_grid();
        for (auto seed : seed_list(c)) {
            const SolutionField f = field_solution(c, grid, seed);
            const std::string tag = "field_" + std::to_string(seed);
            const std::string path = (std::filesystem::path(c.output.dir) / (c.output.prefix + tag + ".bin")).string();
            write_field_binary(path, f);
            o.files.emplace_back(tag + ".json", dump_json(field_sidecar(f)));
            Json j = field_sidecar(f);
            j["binary"] = c.output.prefix + tag + ".bin";
            o.check(j, tag, f.max_relative_residual <= 1e-12,
                    "max relative solve residual " + num(f.max_relative_residual) + " <= 1e-12");
        }
        return;
    }
    const SolutionSpan span = probe_span(c, d, static_cast<std::size_t>(c.experiment.count));
    o.files.emplace_back("span.json", dump_json(to_json(span)));
    for (std::size_t i = 0; i < span.size(); ++i) {
        const SolutionSum e = span.element(i);
        Json j;
        j["id"] = span.ids()[i];
        Json terms = Json::array();
        bool member = true;
        double dmin = 0.0;
        for (const auto& u : e) {
            terms.push_back(to_json(u));
            const GrowthClass g = classify_growth(u);
            member = member && g.kind == GrowthClass::Kind::EdMember;
            dmin = std::max(dmin, g.d_min);
        }
        j["terms"] = terms;
        j["ed_member"] = member;
        j["d_min"] = dmin;
        if (member) j["witness"] = growth_witness(e);
        o.check(j, span.ids()[i], member, member ? "member of E_d for d >= " + num(dmin) : "not ancient-bounded (rho < 0)");
    }
}

void cmd_gram(const ExperimentConfig& c, Outcome& o) {
    const StripDomain d = c.make_domain();
    const SolutionSpan span = probe_span(c, d, static_cast<std::size_t>(c.experiment.count));
    const std::vector<double> radii = c.experiment.radii.empty() ? std::vector<double>{c.experiment.r} : c.experiment.radii;
    const auto grid = method_grid(c);
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const std::string name = "gram_r" + std::to_string(i);
        try {
            const GramMatrix g = gram(span, radii[i], gram_method(c), grid);
            check_gram(g);
            Json j = gram_header(g);
            o.check(j, name, true, "r = " + num(g.r) + ", conditioning " + num(g.conditioning()));
            o.tables.emplace_back(name, gram_csv(g));
        } catch (const Error& e) {
            o.error(name, e);
        }
    }
}

void cmd_verify_lemma(const ExperimentConfig& c, Outcome& o, bool l2) {
    const StripDomain d = c.make_domain();
    const double r = c.experiment.r, R = c.experiment.R;
    const std::string tag = l2 ? "l2-reverse" : "reverse-poincare";
    if (c.experiment.source == "closed") {
        require_laplacian(c);
        const EstimateConstants k = estimate_constants(1.0, 1.0, d.first_eigenvalue());
        for (double a : alpha_list(c)) {
            const SolutionSum u = closed_solution(d, a);
            add_estimate(o, l2 ? l2_reverse_check(u, r, R, k) : reverse_poincare_check(u, r, R, k),
                         tag + " " + alpha_label(a));
        }
        return;
    }
    const SpaceTimeGrid grid = c.make_grid();
    const OperatorCoefficients op = c.make_operator();
    const CoefficientReport cr = validate_coefficients(op, grid);
    o.check(to_json(cr), "coefficients " + op.name, cr.pass,
            cr.pass ? "operator within declared bounds"
                    : "operator violates declared bounds: " + cr.first_violation->reason);
    if (!cr.pass) return;
    for (auto seed : seed_list(c)) {
        const SolutionField f = field_solution(c, grid, seed);
        add_estimate(o, l2 ? l2_reverse_check(f, op, r, R) : reverse_poincare_check(f, op, r, R),
                     tag + " seed=" + std::to_string(seed));
    }
}

void cmd_verify_slice(const ExperimentConfig& c, Outcome& o) {
    const StripDomain d = c.make_domain();
    const double r = c.experiment.r, R = c.experiment.R;
    if (c.experiment.source == "closed") {
        for (double a : alpha_list(c))
            add_estimate(o, slice_poincare_check(closed_solution(d, a), d, r, R), "slice-poincare " + alpha_label(a));
        return;
    }
    const SpaceTimeGrid grid = c.make_grid();
    for (auto seed : seed_list(c))
        add_estimate(o, slice_poincare_check(field_solution(c, grid, seed), r, R),
                     "slice-poincare seed=" + std::to_string(seed));
}

void cmd_verify_growth(const ExperimentConfig& c, Outcome& o) {
    if (c.experiment.source != "closed") fail(ErrorCategory::Config, "verify growth needs source = closed");
    require_laplacian(c);
    const StripDomain d = c.make_domain();
    const std::vector<double> radii =
        c.experiment.radii.empty() ? std::vector<double>{1, 2, 3, 4, 5, 6} : c.experiment.radii;
    for (double a : alpha_list(c)) {
        const SolutionSum u = closed_solution(d, a);
        const GrowthIterationReport it = growth_iteration_check(u, c.experiment.r, 0.0, c.experiment.K);
        std::string s = "min I(r + k r0)/(e^k I(r)) = " + num(it.min_ratio) + " >= 1 with r0 = " + num(it.r0);
        o.check(to_json(it), "growth-iteration " + alpha_label(a), it.pass, s);
        const GrowthExponent g = growth_exponent(u, radii);
        const double need = it.r0 > 0.0 ? 1.0 / it.r0 : 0.0;
        const bool ok = g.zero || g.slope >= need;
        Json j = to_json(g);
        j["one_over_r0"] = need;
        o.check(j, "growth-exponent " + alpha_label(a), ok,
                "slope " + num(g.slope) + (ok ? " >= " : " < ") + "1/r0_emp = " + num(need));
    }
}

void cmd_verify_liouville(const ExperimentConfig& c, Outcome& o) {
    if (c.experiment.source != "closed") fail(ErrorCategory::Config, "verify liouville needs source = closed");
    require_laplacian(c);
    const StripDomain d = c.make_domain();
    const std::vector<double> ds = c.experiment.d ? std::vector<double>{*c.experiment.d} : std::vector<double>{1, 2, 3};
    for (double a : alpha_list(c)) {
        for (double dd : ds) {
            const LiouvilleProbe p = polynomial_liouville_probe(closed_solution(d, a), dd, c.experiment.r,
                                                                c.experiment.K, 0.0, c.experiment.margin);
            // a certificate refutes membership of P_d, which is the expected outcome for u != 0
            const bool ok = p.zero || p.certificate;
            Json j = to_json(p);
            j["pass"] = ok;
            o.check(j, "liouville " + alpha_label(a) + " d=" + num(dd), ok,
                    p.certificate ? "certificate at k = " + std::to_string(p.certificate_k) + ", log ratio " +
                                        num(p.log_ratio) + " > log " + num(p.margin)
                                  : "no certificate up to k_max");
        }
    }
}

void cmd_verify_mean_value(const ExperimentConfig& c, Outcome& o) {
    if (c.experiment.source != "closed") fail(ErrorCategory::Config, "verify mean-value needs source = closed");
    require_laplacian(c);
    const StripDomain d = c.make_domain();
    double t = 0.0;
    SpacePoint x;
    if (c.experiment.center.empty()) {
        for (int a = 0; a < d.n(); ++a) x.cross[static_cast<std::size_t>(a)] = 0.5 * d.length(a);
    } else {
        t = c.experiment.center[0];
        x.x0 = c.experiment.center[1];
        for (int a = 0; a < d.n(); ++a) x.cross[static_cast<std::size_t>(a)] = c.experiment.center[static_cast<std::size_t>(a) + 2];
    }
    MeanValueOptions mo;
    mo.C_mv = c.experiment.C_mv > 0.0 ? c.experiment.C_mv : default_mean_value_constant(d.n());
    for (double a : alpha_list(c))
        add_estimate(o, mean_value_check(closed_solution(d, a), d, t, x, c.experiment.r, mo),
                     "mean-value " + alpha_label(a));
}

std::size_t span_size(const ExperimentConfig& c) {
    return c.experiment.alphas.empty() ? 2 * static_cast<std::size_t>(c.experiment.k) : c.experiment.alphas.size();
}

double cm_delta(const ExperimentConfig& c) { return c.experiment.delta.value_or(1.0 / c.experiment.d.value_or(6.0)); }

void cmd_cm_f(const ExperimentConfig& c, Outcome& o) {
    const StripDomain d = c.make_domain();
    const SolutionSpan span = probe_span(c, d, span_size(c));
    const std::vector<double> radii =
        c.experiment.radii.empty() ? std::vector<double>{0.5, 1.0, 1.5, 2.0} : c.experiment.radii;
    MonotoneTable t = compute_f(span, radii, gram_method(c), method_grid(c));
    attach_growth_bounds(t, span);
    const FPropertiesReport p = verify_f_properties(t, span);
    Json j = to_json(t);
    o.check(j, "f-table", true, std::to_string(t.size()) + " functions on " + std::to_string(t.count()) + " radii");
    std::string s = "bound " + std::string(p.bound_ok ? "ok" : "violated") + ", energy bound " +
                    (p.energy_bound_ok ? "ok" : "violated") + ", projection " + (p.projection_ok ? "ok" : "violated") +
                    ", monotone " + (p.monotone_ok ? "ok" : "violated") + " (" + std::to_string(p.pairs_checked) +
                    " pairs)";
    if (!p.violations.empty()) s += "; first: " + p.violations.front().property + " " + p.violations.front().detail;
    o.check(to_json(p), "f-properties", p.pass(), s);
    CsvTable csv;
    csv.header = {"radius", "function", "log_f"};
    for (std::size_t m = 0; m < t.count(); ++m)
        for (std::size_t i = 0; i < t.size(); ++i)
            csv.add({csv_cell(t.radii[m]), csv_cell(t.ids[i]),
                     csv_cell(t.log_values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)))});
    o.tables.emplace_back("f", csv);
}

void cmd_cm_select(const ExperimentConfig& c, Outcome& o) {
    const StripDomain d = c.make_domain();
    const SolutionSpan span = probe_span(c, d, span_size(c));
    const double delta = cm_delta(c);
    const int M = c.experiment.M > 0 ? c.experiment.M : static_cast<int>(std::ceil(64.0 / delta - 1e-9));
    MonotoneTable t = compute_f_ladder(span, delta, M, gram_method(c), method_grid(c));
    attach_growth_bounds(t, span);
    if (c.experiment.d) t.d_growth = 4.0 * *c.experiment.d + 1.0;
    const std::size_t ell = c.experiment.ell > 0 ? static_cast<std::size_t>(c.experiment.ell) : t.size() / 2;
    const double sigma = c.experiment.sigma.value_or(2.0 * good_basis_sigma(t.d_growth / 4.0 - 0.25, delta));
    const SelectionReport s = select_scales(t, ell, sigma, c.experiment.m0, M);
    bool certified = true;
    for (std::size_t q = 0; q < s.m_list.size(); ++q)
        for (std::size_t i : s.subsets[q]) certified = certified && ratio_holds(t, i, static_cast<std::size_t>(s.m_list[q]), sigma);
    o.check(to_json(s), "select", certified,
            std::to_string(s.m_list.size()) + " admissible m, first m = " + std::to_string(s.m_list.front()) +
                ", threshold " + num(s.threshold) + " < sigma " + num(sigma) + (certified ? ", certified" : ", NOT certified"));
}

GoodBasisOptions basis_options(const ExperimentConfig& c) {
    GoodBasisOptions g;
    g.method = gram_method(c);
    g.grid = method_grid(c);
    g.M = c.experiment.M;
    g.d = c.experiment.d;
    g.sigma = c.experiment.sigma;
    return g;
}

void basis_checks(const GoodBasis& b, Outcome& o) {
    Json j = to_json(b);
    o.check(j, "basis", true, "m = " + std::to_string(b.m) + ", ell = " + std::to_string(b.ell) + " of k = " +
                                  std::to_string(b.k) + ", sigma = " + num(b.sigma));
    o.check(Json{{"value", b.residual_top}}, "residual-top", b.residual_top < 1e-8,
            "max |V^T G_{(m+1)delta} V - I| = " + num(b.residual_top) + " < 1e-8");
    o.check(Json{{"value", b.residual_offdiag}}, "residual-offdiag", b.residual_offdiag < 1e-8,
            "max off-diagonal of V^T G_{m delta} V = " + num(b.residual_offdiag) + " < 1e-8");
    const double kd = static_cast<double>(b.k);
    o.check(Json{{"ell", b.ell}, {"bound", kd / b.sigma}}, "ell-bound", b.ell_bound,
            "ell = " + std::to_string(b.ell) + " >= k/sigma = " + num(kd / b.sigma));
    o.check(Json{{"trace", b.trace_all}, {"bound", 2.0 * kd / b.sigma}}, "trace-chain", b.chain_stated,
            "trace = " + num(b.trace_all) + " >= 2k/sigma = " + num(2.0 * kd / b.sigma));
    o.check(Json{{"trace", b.trace_all}, {"ratio_sum", b.ratio_sum}, {"bound", kd / (2.0 * b.sigma)}},
            "trace-chain-corrected", b.chain_corrected,
            "trace = " + num(b.trace_all) + " >= ratio sum " + num(b.ratio_sum) + " >= k/(2 sigma) = " +
                num(kd / (2.0 * b.sigma)));
    o.check(Json{{"trace", b.trace_retained}, {"ell", b.ell}}, "hard-bound", b.hard_bound,
            "sum I_{v_i}(m delta) = " + num(b.trace_retained) + " <= ell = " + std::to_string(b.ell));
}

void cmd_cm_basis(const ExperimentConfig& c, Outcome& o) {
    const StripDomain d = c.make_domain();
    const SolutionSpan span = probe_span(c, d, span_size(c));
    const GoodBasis b = good_basis(span, cm_delta(c), c.experiment.m0, basis_options(c));
    basis_checks(b, o);
    o.tables.emplace_back("v", matrix_csv(b.v));
}

void cmd_cm_trace(const ExperimentConfig& c, Outcome& o) {
    const StripDomain d = c.make_domain();
    const SolutionSpan span = probe_span(c, d, span_size(c));
    const GoodBasisOptions opt = basis_options(c);
    const GoodBasis b = good_basis(span, cm_delta(c), c.experiment.m0, opt);
    const TraceBoundReport t = trace_bound_check(span, b, opt.method, opt.grid);
    o.check(to_json(t), "trace-bound", t.pass,
            "sum I_{v_i}(a) = " + num(t.trace) + " <= ell = " + std::to_string(t.ell) + ", C_emp = " +
                num(t.empirical_constant));
    if (b.ell > 0) {
        const auto pts = kernel_sample_points(d, b.m * b.delta, c.experiment.kernel_points, c.seed);
        const KernelTrace k = kernel_trace(span, b.v, (b.m + 1) * b.delta, pts, c.seed);
        o.check(to_json(k), "kernel-gram", k.max_relative_defect <= 1e-10,
                "max |K - K_gram| / max K = " + num(k.max_relative_defect) + " <= 1e-10");
        const double rot = kernel_rotation_defect(span, b.v, pts, c.seed);
        o.check(Json{{"value", rot}}, "kernel-rotation", rot <= 1e-10, "rotation defect " + num(rot) + " <= 1e-10");
    }
    const DeltaLadder lad = delta_ladder(span, c.experiment.ladder, c.experiment.m0, opt);
    o.check(to_json(lad), "delta-ladder", lad.monotone,
            std::string("trace non-decreasing as delta decreases: ") + (lad.monotone ? "yes" : "no") +
                ", max C_emp = " + num(lad.max_constant));
}

void cmd_experiment_dimension(const ExperimentConfig& c, Outcome& o) {
    const StripDomain d = c.make_domain();
    DimensionOptions opt;
    opt.ladder = c.experiment.ladder;
    opt.m0 = c.experiment.m0;
    opt.kernel_points = c.experiment.kernel_points;
    opt.seed = c.seed;
    opt.method = gram_method(c);
    const double dd = c.experiment.d.value_or(6.0);
    const DimensionReport r = dimension_experiment(d, dd, static_cast<std::size_t>(c.experiment.k), opt);
    const Json j = to_json(r);
    if (r.vacuous) {
        o.check(j, "dimension", true, r.message);
        return;
    }
    o.check(j, "dimension", r.pass,
            "d = " + num(dd) + ", k = " + std::to_string(r.k) + ", ell = " + std::to_string(r.basis->ell) +
                ", trace = " + num(r.trace->trace));
    o.check(Json{{"trace", r.trace->trace}, {"ell", r.basis->ell}}, "hard-bound", r.trace->hard_bound,
            "sum I_{v_i}(m delta) = " + num(r.trace->trace) + " <= ell = " + std::to_string(r.basis->ell));
    o.check(Json{{"value", r.rotation_defect}}, "kernel-rotation", r.rotation_defect <= 1e-10,
            "rotation defect " + num(r.rotation_defect) + " <= 1e-10");
    o.check(to_json(r.ladder), "delta-ladder", r.ladder.monotone,
            std::string("trace non-decreasing as delta decreases: ") + (r.ladder.monotone ? "yes" : "no"));
    o.check(Json{{"trace", r.trace->trace}, {"bound", std::exp(-20.0) * static_cast<double>(r.k)}}, "lower-chain",
            r.lower_chain, "trace " + num(r.trace->trace) + " >= e^-20 k");
    o.check(Json{{"trace", r.trace->trace}, {"bound", r.upper_chain_rhs}}, "upper-chain", r.upper_chain,
            "trace " + num(r.trace->trace) + " <= C_emp d^(n+2) = " + num(r.upper_chain_rhs));
    o.check(Json{{"k", r.k}, {"bound", r.implied_k_bound}}, "implied-bound", r.implied_bound_holds,
            "k = " + std::to_string(r.k) + " <= e^20 C_emp d^(n+2) = " + num(r.implied_k_bound));
    CsvTable t;
    t.header = {"delta", "ok", "ell", "m", "trace", "empirical_constant"};
    for (const auto& s : r.ladder.steps)
        t.add({csv_cell(s.delta), csv_cell(s.ok ? 1 : 0), csv_cell(s.ell), csv_cell(s.m), csv_cell(s.trace),
               csv_cell(s.empirical_constant)});
    o.tables.emplace_back("ladder", t);
}

// ---------------------------------------------------------------- driver

struct Binding {
    CLI::Option* opt;
    std::string key;
};

struct Leaf {
    CLI::App* app = nullptr;
    std::string name;
    std::function<void(const ExperimentConfig&, Outcome&)> fn;
};

using Flag = std::pair<const char*, const char*>; ///< (flag, config key)

const std::vector<Flag> kSolutionFlags = {
    {"--alpha", "experiment.alpha"}, {"--alphas", "experiment.alphas"}, {"--source", "experiment.source"},
    {"--d", "experiment.d"},         {"--count", "experiment.count"},
};
const std::vector<Flag> kCylinderFlags = {{"--r", "experiment.r"}, {"--R", "experiment.R"}};
const std::vector<Flag> kCmFlags = {
    {"--d", "experiment.d"},         {"--k", "experiment.k"},           {"--delta", "experiment.delta"},
    {"--sigma", "experiment.sigma"}, {"--M", "experiment.M"},           {"--m0", "experiment.m0"},
    {"--ell", "experiment.ell"},     {"--radii", "experiment.radii"},   {"--method", "experiment.method"},
    {"--alphas", "experiment.alphas"}, {"--ladder", "experiment.ladder"},
    {"--kernel-points", "experiment.kernel_points"},
};
const std::vector<Flag> kCommonFlags = {
    {"--coefficients", "operator.coefficients"}, {"--scheme", "grid.scheme"}, {"--formats", "output.formats"},
    {"--prefix", "output.prefix"}, {"--seeds", "experiment.seeds"},
};

} // namespace

void set_timestamp_override(const std::string& ts) { g_timestamp_override = ts; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Numerical checks for ancient caloric functions on strips", "ancient"};
    app.require_subcommand(1);

    std::map<std::string, std::string> staged; // config key -> flag text
    std::vector<Binding> bindings;
    std::string config_path, compare_path, out_dir;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::vector<Leaf> leaves;

    auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, const std::string& label,
                    std::vector<std::vector<Flag>> groups, std::function<void(const ExperimentConfig&, Outcome&)> fn) {
        CLI::App* a = parent->add_subcommand(name, help);
        a->add_option("--config", config_path, "key = value config file");
        a->add_option("--seed", seed, "global seed");
        a->add_option("--out", out_dir, "output directory");
        a->add_option("--compare", compare_path, "baseline report to diff against");
        a->add_option("--set", sets, "override: KEY=VALUE");
        groups.push_back(kCommonFlags);
        for (const auto& g : groups)
            for (const auto& [flag, key] : g) {
                if (a->get_option_no_throw(flag)) continue;
                CLI::Option* o = a->add_option(flag, staged[key], std::string("sets ") + key);
                bindings.push_back({o, key});
            }
        leaves.push_back({a, label, std::move(fn)});
    };

    leaf(&app, "spectrum", "Dirichlet modes of the cross-section", "spectrum",
         {{{"--mu-max", "experiment.mu_max"}, {"--nodes", "experiment.nodes"}, {"--count", "experiment.count"},
           {"--n", "domain.n"}, {"--lengths", "domain.lengths"}}},
         cmd_spectrum);
    CLI::App* sol = app.add_subcommand("solutions", "separated solutions and FD fields");
    sol->require_subcommand(1);
    leaf(sol, "build", "build and classify a solution family", "solutions_build", {kSolutionFlags}, cmd_solutions_build);
    leaf(&app, "gram", "Gram matrices of a solution family", "gram",
         {kSolutionFlags, {{"--radii", "experiment.radii"}, {"--r", "experiment.r"}, {"--method", "experiment.method"}}},
         cmd_gram);
    CLI::App* ver = app.add_subcommand("verify", "energy estimates");
    ver->require_subcommand(1);
    leaf(ver, "reverse-poincare", "gradient display", "verify_reverse-poincare", {kSolutionFlags, kCylinderFlags},
         [](const ExperimentConfig& c, Outcome& o) { cmd_verify_lemma(c, o, false); });
    leaf(ver, "l2-reverse", "L2 display", "verify_l2-reverse", {kSolutionFlags, kCylinderFlags},
         [](const ExperimentConfig& c, Outcome& o) { cmd_verify_lemma(c, o, true); });
    leaf(ver, "slice-poincare", "cross-section Poincare", "verify_slice-poincare", {kSolutionFlags, kCylinderFlags},
         cmd_verify_slice);
    leaf(ver, "growth", "growth iteration and exponent", "verify_growth",
         {kSolutionFlags, kCylinderFlags, {{"--K", "experiment.K"}, {"--radii", "experiment.radii"}}}, cmd_verify_growth);
    leaf(ver, "liouville", "polynomial Liouville probe", "verify_liouville",
         {kSolutionFlags, kCylinderFlags, {{"--K", "experiment.K"}, {"--margin", "experiment.margin"}}},
         cmd_verify_liouville);
    leaf(ver, "mean-value", "mean value inequality", "verify_mean-value",
         {kSolutionFlags, kCylinderFlags, {{"--center", "experiment.center"}, {"--cmv", "experiment.C_mv"}}},
         cmd_verify_mean_value);
    CLI::App* cm = app.add_subcommand("cm", "residual energies, selection and good bases");
    cm->require_subcommand(1);
    leaf(cm, "f", "f_i table and its properties", "cm_f", {kCmFlags}, cmd_cm_f);
    leaf(cm, "select", "scale selection", "cm_select", {kCmFlags}, cmd_cm_select);
    leaf(cm, "basis", "good basis", "cm_basis", {kCmFlags}, cmd_cm_basis);
    leaf(cm, "trace", "trace bound, kernel and delta ladder", "cm_trace", {kCmFlags}, cmd_cm_trace);
    CLI::App* ex = app.add_subcommand("experiment", "end-to-end experiments");
    ex->require_subcommand(1);
    leaf(ex, "dimension", "dimension pipeline", "experiment_dimension", {kCmFlags}, cmd_experiment_dimension);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorCategory::Config);
    }

    const Leaf* chosen = nullptr;
    for (const auto& l : leaves)
        if (l.app->parsed()) chosen = &l;
    if (!chosen) {
        err << "error: no command given\n";
        return static_cast<int>(ErrorCategory::Config);
    }

    ExperimentConfig cfg;
    KeyValueConfig kv;
    try {
        if (!config_path.empty()) kv = KeyValueConfig::load(config_path);
        for (const auto& b : bindings)
            if (b.opt->count() > 0) kv.set(b.key, staged[b.key]);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) fail(ErrorCategory::Config, "--set expects KEY=VALUE, got '" + s + "'");
            kv.set(s.substr(0, eq), s.substr(eq + 1));
        }
        if (seed) kv.set("seed", std::to_string(*seed));
        if (!out_dir.empty()) kv.set("output.dir", out_dir);
        cfg = ExperimentConfig::from(kv);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(e.category());
    }

    Outcome o;
    try {
        chosen->fn(cfg, o);
    } catch (const Error& e) {
        o.error(chosen->name, e);
    }

    Json report;
    report["command"] = chosen->name;
    Json echo = Json::object();
    for (const auto& [k, v] : kv.entries())
        if (k.rfind("output.", 0) != 0) echo[k] = v.value;
    report["config"] = echo;
    report["pass"] = o.pass();
    if (o.first)
        report["first_failure"] = {{"check", o.first->check},
                                   {"category", category_name(o.first->category)},
                                   {"exit_code", static_cast<int>(o.first->category)},
                                   {"message", o.first->message}};
    report["results"] = o.results;
    report["metadata"] = {{"timestamp", timestamp()}, {"program", "ancient 0.1.0"}};

    for (const auto& l : o.lines) out << l << "\n";

    const std::filesystem::path dir(cfg.output.dir);
    const std::string base = cfg.output.prefix + chosen->name;
    try {
        if (cfg.wants("json")) write_text_atomic((dir / (base + ".json")).string(), dump_json(report));
        if (cfg.wants("csv"))
            for (const auto& [name, table] : o.tables) write_text_atomic((dir / (base + "_" + name + ".csv")).string(), table.str());
        for (const auto& [suffix, content] : o.files)
            write_text_atomic((dir / (cfg.output.prefix + suffix)).string(), content);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(e.category());
    }

    int code = o.first ? static_cast<int>(o.first->category) : 0;
    if (o.first) err << "first failure [" << category_name(o.first->category) << "] " << o.first->check << ": "
                     << o.first->message << "\n";

    if (!compare_path.empty()) {
        try {
            const Json baseline = load_json(compare_path);
            const Json current = parse_json(dump_json(report));
            const auto diffs = compare_reports(baseline, current);
            Json cj = Json::array();
            for (const auto& d : diffs) {
                cj.push_back({{"path", d.path}, {"baseline", d.baseline}, {"current", d.current}});
                out << "DIFF " << d.path << ": baseline " << d.baseline << ", current " << d.current << "\n";
            }
            write_text_atomic((dir / (base + ".compare.json")).string(),
                              dump_json(Json{{"baseline", compare_path}, {"differences", cj}}));
            out << (diffs.empty() ? "compare: identical within tolerance\n"
                                  : "compare: " + std::to_string(diffs.size()) + " differences\n");
            if (!diffs.empty() && code == 0) code = static_cast<int>(ErrorCategory::Invariant);
        } catch (const Error& e) {
            err << "error: " << e.what() << "\n";
            if (code == 0) code = static_cast<int>(e.category());
        }
    }
    return code;
}

} // namespace ancient::cli
