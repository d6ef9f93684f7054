#include "ancient/report.hpp"
#include "ancient/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ancient {

namespace fs = std::filesystem;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

namespace {

void dump_rec(const Json& j, int indent, int depth, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        out += nl;
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) {
                out += ',';
                out += nl;
            }
            first = false;
            out += pad;
            out += Json(it.key()).dump();
            out += indent > 0 ? ": " : ":";
            dump_rec(it.value(), indent, depth + 1, out);
        }
        out += nl;
        out += close;
        out += '}';
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        // arrays of scalars stay on one line
        bool flat = true;
        for (const auto& e : j) flat = flat && !e.is_structured();
        out += '[';
        bool first = true;
        for (const auto& e : j) {
            if (!first) out += flat ? ", " : ",";
            if (!flat) {
                out += nl;
                out += pad;
            }
            first = false;
            dump_rec(e, indent, depth + 1, out);
        }
        if (!flat) {
            out += nl;
            out += close;
        }
        out += ']';
        return;
    }
    case Json::value_t::number_float: {
        const double v = j.get<double>();
        if (std::isfinite(v)) out += format_number(v);
        else out += '"' + format_number(v) + '"';
        return;
    }
    default:
        out += j.dump();
    }
}

double as_number(const Json& j, bool& ok) {
    ok = true;
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "inf") return INFINITY;
        if (s == "-inf") return -INFINITY;
        if (s == "nan") return NAN;
    }
    ok = false;
    return 0.0;
}

std::string short_text(const Json& j) {
    if (j.is_number_float()) return format_number(j.get<double>());
    std::string s = j.dump();
    if (s.size() > 80) s = s.substr(0, 77) + "...";
    return s;
}

void compare_rec(const Json& a, const Json& b, const std::string& path, const CompareOptions& opt,
                 std::vector<ReportDifference>& out) {
    bool na = false, nb = false;
    const double x = as_number(a, na), y = as_number(b, nb);
    if (na && nb && (a.is_number() || b.is_number())) {
        double rtol = opt.rtol;
        std::size_t best = 0;
        for (const auto& [prefix, tol] : opt.field_rtol)
            if (path.compare(0, prefix.size(), prefix) == 0 && prefix.size() >= best) {
                best = prefix.size();
                rtol = tol;
            }
        bool same;
        if (std::isnan(x) || std::isnan(y)) same = std::isnan(x) && std::isnan(y);
        else if (std::isinf(x) || std::isinf(y)) same = x == y;
        else same = std::abs(x - y) <= opt.atol + rtol * std::max(std::abs(x), std::abs(y));
        if (!same) out.push_back({path, short_text(a), short_text(b)});
        return;
    }
    if (a.type() != b.type() && !(a.is_number() && b.is_number())) {
        out.push_back({path, short_text(a), short_text(b)});
        return;
    }
    if (a.is_object()) {
        for (auto it = a.begin(); it != a.end(); ++it) {
            const std::string p = path + "/" + it.key();
            if (path.empty() && std::find(opt.ignore.begin(), opt.ignore.end(), it.key()) != opt.ignore.end()) continue;
            if (!b.contains(it.key())) out.push_back({p, short_text(it.value()), "<missing>"});
            else compare_rec(it.value(), b.at(it.key()), p, opt, out);
        }
        for (auto it = b.begin(); it != b.end(); ++it) {
            if (path.empty() && std::find(opt.ignore.begin(), opt.ignore.end(), it.key()) != opt.ignore.end()) continue;
            if (!a.contains(it.key())) out.push_back({path + "/" + it.key(), "<missing>", short_text(it.value())});
        }
        return;
    }
    if (a.is_array()) {
        if (a.size() != b.size()) {
            out.push_back({path + "/length", std::to_string(a.size()), std::to_string(b.size())});
            return;
        }
        for (std::size_t i = 0; i < a.size(); ++i) compare_rec(a[i], b[i], path + "/" + std::to_string(i), opt, out);
        return;
    }
    if (a != b) out.push_back({path, short_text(a), short_text(b)});
}

Json pairs_json(const std::vector<std::pair<std::string, double>>& kv) {
    Json j = Json::object();
    for (const auto& [k, v] : kv) j[k] = v;
    return j;
}

Json index_list(const std::vector<std::size_t>& v) {
    Json j = Json::array();
    for (auto i : v) j.push_back(i);
    return j;
}

} // namespace

std::string dump_json(const Json& j, int indent) {
    std::string out;
    dump_rec(j, indent, 0, out);
    out += '\n';
    return out;
}

Json parse_json(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::Io, "cannot parse JSON from " + source + ": " + e.what());
    }
}

Json load_json(const std::string& path) { return parse_json(read_text(path), path); }

void write_text_atomic(const std::string& path, const std::string& content) {
    const fs::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path(), ec);
        if (ec) fail(ErrorCategory::Io, "cannot create directory '" + p.parent_path().string() + "': " + ec.message());
    }
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCategory::Io, "cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) fail(ErrorCategory::Io, "write to '" + tmp.string() + "' failed");
    }
    fs::rename(tmp, p, ec);
    if (ec) fail(ErrorCategory::Io, "cannot rename '" + tmp.string() + "' to '" + path + "': " + ec.message());
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::Io, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void CsvTable::add(std::vector<std::string> row) {
    require(header.empty() || row.size() == header.size(), "CsvTable: row width differs from the header");
    rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

std::string csv_cell(double v) { return format_number(v); }
std::string csv_cell(long long v) { return std::to_string(v); }
std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

Json to_json(const Vector& v) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

Json to_json(const Matrix& m) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        j.push_back(std::move(row));
    }
    return j;
}

CsvTable matrix_csv(const Matrix& m) {
    CsvTable t;
    t.header = {"row", "col", "value"};
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            t.add({csv_cell(static_cast<long long>(i)), csv_cell(static_cast<long long>(c)), csv_cell(m(i, c))});
    return t;
}

Json to_json(const StripDomain& d) {
    Json j;
    j["n"] = d.n();
    j["lengths"] = d.lengths();
    j["X"] = d.truncation();
    j["volume"] = d.volume();
    j["mu1"] = d.first_eigenvalue();
    return j;
}

StripDomain domain_from_json(const Json& j) {
    try {
        return StripDomain(j.at("lengths").get<std::vector<double>>(), j.at("X").get<double>());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::Io, std::string("domain JSON: ") + e.what());
    }
}

Json to_json(const Mode& m) {
    Json j;
    j["k"] = m.k;
    j["mu"] = m.mu;
    j["normalization"] = m.normalization;
    return j;
}

CsvTable modes_csv(const std::vector<Mode>& modes) {
    CsvTable t;
    t.header = {"k-index", "mu", "normalization"};
    for (const auto& m : modes) t.add({csv_cell(m.label()), csv_cell(m.mu), csv_cell(m.normalization)});
    return t;
}

Json to_json(const SeparatedSolution& u) {
    Json j;
    j["coeff"] = u.coeff;
    j["alpha"] = u.alpha;
    j["k"] = u.mode.k;
    j["mu"] = u.mode.mu;
    j["rho"] = u.rho;
    return j;
}

SeparatedSolution solution_from_json(const Json& j, const StripDomain& domain) {
    try {
        const Mode m = make_mode(domain, j.at("k").get<std::vector<int>>());
        SeparatedSolution u = SeparatedSolution::make(j.at("coeff").get<double>(), j.at("alpha").get<double>(), m);
        if (j.contains("rho") && j.at("rho").get<double>() != u.rho)
            fail(ErrorCategory::Io, "solution JSON: stored rho does not equal alpha^2 - mu");
        return u;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::Io, std::string("solution JSON: ") + e.what());
    }
}

Json to_json(const SolutionSpan& s) {
    Json j;
    j["domain"] = to_json(s.domain());
    Json basis = Json::array();
    for (const auto& u : s.basis()) basis.push_back(to_json(u));
    j["basis"] = basis;
    j["coefficients"] = to_json(s.coefficients());
    j["ids"] = s.ids();
    return j;
}

SolutionSpan span_from_json(const Json& j) {
    try {
        const StripDomain d = domain_from_json(j.at("domain"));
        std::vector<SeparatedSolution> basis;
        for (const auto& b : j.at("basis")) basis.push_back(solution_from_json(b, d));
        const auto& rows = j.at("coefficients");
        Matrix C(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(basis.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != basis.size()) fail(ErrorCategory::Io, "span JSON: coefficient row width differs");
            for (std::size_t c = 0; c < basis.size(); ++c)
                C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c].get<double>();
        }
        return SolutionSpan(d, basis, C);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::Io, std::string("span JSON: ") + e.what());
    }
}

Json gram_header(const GramMatrix& g) {
    Json j;
    j["r"] = g.r;
    j["snapped_r"] = g.snapped_r;
    j["time_extent"] = g.time_extent;
    j["method"] = to_string(g.method);
    j["basis_ids"] = g.basis_ids;
    j["log_scale"] = to_json(g.log_scale);
    j["conditioning"] = g.conditioning();
    return j;
}

CsvTable gram_csv(const GramMatrix& g) { return matrix_csv(g.entries()); }

Json to_json(const CoefficientReport& r) {
    Json j;
    j["pass"] = r.pass;
    j["min_rayleigh"] = r.min_rayleigh;
    j["max_abs_a"] = r.max_abs_a;
    j["max_b"] = r.max_b;
    j["max_c"] = r.max_c;
    j["nodes_checked"] = r.nodes_checked;
    j["violating_nodes"] = r.violating_nodes;
    if (r.first_violation) {
        Json v;
        v["node"] = r.first_violation->node;
        v["x0"] = r.first_violation->x.x0;
        v["cross"] = r.first_violation->x.cross;
        v["reason"] = r.first_violation->reason;
        j["first_violation"] = v;
    }
    return j;
}

Json field_sidecar(const SolutionField& f) {
    const auto& g = f.grid();
    Json j;
    j["format"] = "little-endian u64 nt, n0, n1; f64 tau, h0, h1, T, X; u64 seed; f64 values (t, x0, x1)";
    j["nt"] = g.nt();
    j["n0"] = g.n0();
    j["n1"] = g.n_cross(0);
    j["tau"] = g.tau();
    j["h0"] = g.h0();
    j["h1"] = g.h(0);
    j["T"] = g.time_extent();
    j["X"] = g.domain().truncation();
    j["L"] = g.domain().length(0);
    j["seed"] = f.seed;
    j["scheme"] = to_string(f.scheme);
    j["operator"] = f.operator_name;
    j["max_relative_residual"] = f.max_relative_residual;
    j["values"] = f.field.values.size();
    return j;
}

Json to_json(const EstimateReport& r) {
    Json j;
    j["check"] = r.check;
    j["source"] = r.source;
    j["pass"] = r.pass;
    j["vacuous"] = r.vacuous;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["constant_used"] = r.constant_used;
    j["empirical_constant"] = r.empirical_constant;
    j["r"] = r.r;
    j["R"] = r.R;
    j["snapped_r"] = r.snapped_r;
    j["snapped_R"] = r.snapped_R;
    if (!r.grid.empty()) j["grid"] = r.grid;
    j["details"] = pairs_json(r.details);
    if (!r.message.empty()) j["message"] = r.message;
    return j;
}

Json to_json(const GrowthIterationReport& r) {
    Json j;
    j["check"] = "growth-iteration";
    j["pass"] = r.pass;
    j["vacuous"] = r.vacuous;
    j["r"] = r.r;
    j["r0"] = r.r0;
    j["constant"] = r.constant;
    j["K"] = r.K;
    j["ratios"] = r.ratios;
    j["min_ratio"] = r.min_ratio;
    return j;
}

Json to_json(const GrowthExponent& g) {
    Json j;
    j["slope"] = g.slope;
    j["intercept"] = g.intercept;
    j["residual"] = g.residual;
    j["zero"] = g.zero;
    j["radii"] = g.radii;
    j["log_energy"] = g.log_energy;
    return j;
}

Json to_json(const LiouvilleProbe& p) {
    Json j;
    j["check"] = "polynomial-liouville";
    j["zero"] = p.zero;
    j["certificate"] = p.certificate;
    j["pass"] = p.zero;
    j["d"] = p.d;
    j["r"] = p.r;
    j["r0"] = p.r0;
    j["K"] = p.K;
    j["log_fitted_constant"] = p.log_fitted_constant;
    j["certificate_k"] = p.certificate_k;
    j["log_ratio"] = p.log_ratio;
    j["margin"] = p.margin;
    j["model_k"] = p.model_k;
    return j;
}

Json to_json(const MonotoneTable& t) {
    Json j;
    j["delta"] = t.delta;
    j["radii"] = t.radii;
    j["log_values"] = to_json(t.log_values);
    j["d_growth"] = t.d_growth;
    j["C_growth"] = t.C_growth;
    if (t.method) j["method"] = to_string(*t.method);
    j["ids"] = t.ids;
    return j;
}

Json to_json(const FPropertiesReport& r) {
    Json j;
    j["check"] = "f-properties";
    j["pass"] = r.pass();
    j["bound_ok"] = r.bound_ok;
    j["energy_bound_ok"] = r.energy_bound_ok;
    j["projection_ok"] = r.projection_ok;
    j["monotone_ok"] = r.monotone_ok;
    j["pairs_checked"] = r.pairs_checked;
    j["worst_bound_log_margin"] = r.worst_bound_log_margin;
    Json v = Json::array();
    for (const auto& x : r.violations)
        v.push_back({{"property", x.property}, {"function", x.function}, {"index", x.index}, {"detail", x.detail}});
    j["violations"] = v;
    return j;
}

Json to_json(const SelectionReport& s) {
    Json j;
    j["k"] = s.k;
    j["ell"] = s.ell;
    j["sigma"] = s.sigma;
    j["threshold"] = s.threshold;
    j["precondition_margin"] = s.threshold > 0.0 ? s.sigma / s.threshold : 0.0;
    j["delta"] = s.delta;
    j["m0"] = s.m0;
    j["M"] = s.M;
    j["m_list"] = s.m_list;
    Json subs = Json::array();
    for (const auto& sub : s.subsets) subs.push_back(index_list(sub));
    j["subsets"] = subs;
    j["subset"] = index_list(s.subset);
    return j;
}

Json to_json(const GoodBasis& b) {
    Json j;
    j["k"] = b.k;
    j["delta"] = b.delta;
    j["d"] = b.d;
    j["sigma"] = b.sigma;
    j["sigma_reference"] = b.sigma_reference;
    j["m0_requested"] = b.m0_requested;
    j["m0_used"] = b.m0_used;
    j["m"] = b.m;
    j["subset"] = index_list(b.subset);
    j["selection"] = to_json(b.selection);
    j["values_all"] = to_json(b.values_all);
    j["retained"] = index_list(b.retained);
    j["ell"] = b.ell;
    j["I_small"] = to_json(b.I_small);
    j["trace_all"] = b.trace_all;
    j["trace_retained"] = b.trace_retained;
    j["ratio_sum"] = b.ratio_sum;
    j["residual_top"] = b.residual_top;
    j["residual_offdiag"] = b.residual_offdiag;
    j["chain_stated"] = b.chain_stated;
    j["chain_corrected"] = b.chain_corrected;
    j["ell_bound"] = b.ell_bound;
    j["hard_bound"] = b.hard_bound;
    j["conditioning_top"] = b.conditioning_top;
    j["conditioning_bottom"] = b.conditioning_bottom;
    j["v"] = to_json(b.v);
    j["notes"] = b.notes;
    return j;
}

Json to_json(const KernelTrace& k) {
    Json j;
    Json pts = Json::array();
    for (std::size_t i = 0; i < k.points.size(); ++i) {
        const auto& p = k.points[i];
        pts.push_back({{"t", p.t}, {"x0", p.x.x0}, {"cross", p.x.cross}, {"K", k.K[i]}, {"K_gram", k.K_gram[i]}});
    }
    j["points"] = pts;
    j["max_relative_defect"] = k.max_relative_defect;
    return j;
}

Json to_json(const TraceBoundReport& t) {
    Json j;
    j["check"] = "trace-bound";
    j["pass"] = t.pass;
    j["a"] = t.a;
    j["delta"] = t.delta;
    j["ell"] = t.ell;
    j["trace"] = t.trace;
    j["annulus_kernel"] = t.annulus_kernel;
    j["empirical_constant"] = t.empirical_constant;
    j["hard_bound"] = t.hard_bound;
    return j;
}

Json to_json(const DeltaLadder& l) {
    Json j;
    j["monotone"] = l.monotone;
    j["constant_monotone"] = l.constant_monotone;
    j["max_constant"] = l.max_constant;
    Json steps = Json::array();
    for (const auto& s : l.steps) {
        Json x;
        x["delta"] = s.delta;
        x["ok"] = s.ok;
        x["ell"] = s.ell;
        x["m"] = s.m;
        x["trace"] = s.trace;
        x["empirical_constant"] = s.empirical_constant;
        if (!s.error.empty()) x["error"] = s.error;
        steps.push_back(x);
    }
    j["steps"] = steps;
    return j;
}

Json to_json(const DimensionReport& r) {
    Json j;
    j["check"] = "dimension";
    j["pass"] = r.pass;
    j["vacuous"] = r.vacuous;
    j["d"] = r.d;
    j["k"] = r.k;
    j["n"] = r.n;
    if (!r.message.empty()) j["message"] = r.message;
    j["probe_count"] = r.probe_count;
    j["higher_modes"] = r.higher_modes;
    j["weyl_count"] = r.weyl_count;
    j["delta"] = r.delta;
    j["sigma"] = r.sigma;
    j["sigma_reference"] = r.sigma_reference;
    if (r.basis) j["basis"] = to_json(*r.basis);
    if (r.trace) j["trace"] = to_json(*r.trace);
    j["rotation_defect"] = r.rotation_defect;
    j["kernel_defect"] = r.kernel_defect;
    j["ladder"] = to_json(r.ladder);
    j["lower_chain"] = r.lower_chain;
    j["upper_chain_rhs"] = r.upper_chain_rhs;
    j["upper_chain"] = r.upper_chain;
    j["C_emp"] = r.C_emp;
    j["implied_k_bound"] = r.implied_k_bound;
    j["implied_bound_holds"] = r.implied_bound_holds;
    j["implied_bound"] = "k = " + std::to_string(r.k) + " <= e^20 C_emp d^(n+2) = " + format_number(r.implied_k_bound);
    return j;
}

std::vector<ReportDifference> compare_reports(const Json& baseline, const Json& current, const CompareOptions& opt) {
    std::vector<ReportDifference> out;
    compare_rec(baseline, current, "", opt, out);
    return out;
}

} // namespace ancient
