#include "ancient/config.hpp"
#include "ancient/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace ancient {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
    if (k.empty() || k.front() == '.' || k.back() == '.') return false;
    return std::all_of(k.begin(), k.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '.' ||
               c == '-';
    });
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) out.push_back(trim(cur));
    if (!v.empty() && v.back() == ',') out.push_back({});
    return out;
}

class Reader {
public:
    explicit Reader(const KeyValueConfig& kv) : kv_(kv) {}

    const std::string* raw(const std::string& key) {
        used_.insert(key);
        auto it = kv_.entries().find(key);
        return it == kv_.entries().end() ? nullptr : &it->second.value;
    }

    [[noreturn]] void bad(const std::string& key, const std::string& why) {
        fail(ErrorCategory::Config, "config " + kv_.where(key) + ": " + why);
    }

    double to_double(const std::string& key, const std::string& s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
            bad(key, "expected a number, got '" + s + "'");
        if (!std::isfinite(v)) bad(key, "value must be finite");
        return v;
    }

    long long to_int(const std::string& key, const std::string& s) {
        long long v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
            bad(key, "expected an integer, got '" + s + "'");
        return v;
    }

    void number(const std::string& key, double& out) {
        if (const auto* s = raw(key)) out = to_double(key, *s);
    }
    void number(const std::string& key, std::optional<double>& out) {
        if (const auto* s = raw(key)) out = to_double(key, *s);
    }
    void integer(const std::string& key, int& out) {
        if (const auto* s = raw(key)) {
            const long long v = to_int(key, *s);
            if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) bad(key, "integer out of range");
            out = static_cast<int>(v);
        }
    }
    void unsigned64(const std::string& key, std::uint64_t& out) {
        if (const auto* s = raw(key)) {
            std::uint64_t v = 0;
            const auto res = std::from_chars(s->data(), s->data() + s->size(), v);
            if (res.ec != std::errc() || res.ptr != s->data() + s->size() || s->empty())
                bad(key, "expected a non-negative integer, got '" + *s + "'");
            out = v;
        }
    }
    void text(const std::string& key, std::string& out) {
        if (const auto* s = raw(key)) out = *s;
    }
    void numbers(const std::string& key, std::vector<double>& out) {
        if (const auto* s = raw(key)) {
            out.clear();
            for (const auto& item : split_list(*s)) out.push_back(to_double(key, item));
        }
    }
    void seeds(const std::string& key, std::vector<std::uint64_t>& out) {
        if (const auto* s = raw(key)) {
            out.clear();
            for (const auto& item : split_list(*s)) {
                std::uint64_t v = 0;
                const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
                if (res.ec != std::errc() || res.ptr != item.data() + item.size() || item.empty())
                    bad(key, "expected non-negative integers, got '" + item + "'");
                out.push_back(v);
            }
        }
    }
    void words(const std::string& key, std::vector<std::string>& out) {
        if (const auto* s = raw(key)) {
            out = split_list(*s);
            for (const auto& w : out)
                if (w.empty()) bad(key, "empty list item");
        }
    }

    void reject_unknown() {
        for (const auto& [key, entry] : kv_.entries())
            if (!used_.count(key)) bad(key, "unknown key '" + key + "'");
    }

private:
    const KeyValueConfig& kv_;
    std::set<std::string> used_;
};

} // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& source) {
    KeyValueConfig kv;
    kv.source_ = source;
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string at = source + ":" + std::to_string(no);
        if (eq == std::string::npos) fail(ErrorCategory::Config, "config " + at + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!valid_key(key)) fail(ErrorCategory::Config, "config " + at + ": malformed key '" + key + "'");
        if (value.empty()) fail(ErrorCategory::Config, "config " + at + ": empty value for '" + key + "'");
        if (kv.has(key))
            fail(ErrorCategory::Config, "config " + at + ": duplicate key '" + key + "' (first at line " +
                                            std::to_string(kv.entries_.at(key).line) + ")");
        kv.entries_[key] = Entry{value, no};
    }
    return kv;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::Io, "cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    if (!valid_key(key)) fail(ErrorCategory::Config, "malformed key '" + key + "'");
    entries_[key] = Entry{trim(value), 0};
}

std::string KeyValueConfig::where(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return "'" + key + "'";
    if (it->second.line == 0) return "'" + key + "' (command line)";
    return "'" + key + "' (" + source_ + ":" + std::to_string(it->second.line) + ")";
}

const std::vector<std::string>& ExperimentConfig::known_keys() {
    static const std::vector<std::string> keys = {
        "seed",
        "domain.n", "domain.lengths", "domain.X",
        "operator.coefficients", "operator.lambda_ell", "operator.Lambda_ell", "operator.eps",
        "grid.h0", "grid.h", "grid.tau", "grid.T", "grid.scheme",
        "experiment.d", "experiment.k", "experiment.delta", "experiment.sigma", "experiment.radii",
        "experiment.seeds", "experiment.M", "experiment.m0", "experiment.ell", "experiment.alpha",
        "experiment.alphas", "experiment.r", "experiment.R", "experiment.K", "experiment.source",
        "experiment.mu_max", "experiment.nodes", "experiment.count", "experiment.method", "experiment.ladder",
        "experiment.kernel_points", "experiment.margin", "experiment.center", "experiment.C_mv",
        "output.dir", "output.formats", "output.prefix",
    };
    return keys;
}

ExperimentConfig ExperimentConfig::from(const KeyValueConfig& kv) {
    ExperimentConfig c;
    Reader rd(kv);
    rd.unsigned64("seed", c.seed);

    rd.integer("domain.n", c.domain.n);
    rd.numbers("domain.lengths", c.domain.lengths);
    rd.number("domain.X", c.domain.X);
    if (c.domain.n != 1 && c.domain.n != 2) rd.bad("domain.n", "n must be 1 or 2");
    if (static_cast<int>(c.domain.lengths.size()) != c.domain.n)
        rd.bad("domain.lengths", "expected " + std::to_string(c.domain.n) + " lengths");
    for (double L : c.domain.lengths)
        if (!(L > 0.0)) rd.bad("domain.lengths", "lengths must be positive");
    if (!(c.domain.X > 0.0)) rd.bad("domain.X", "X must be positive");

    rd.text("operator.coefficients", c.op.coefficients);
    rd.number("operator.lambda_ell", c.op.lambda_ell);
    rd.number("operator.Lambda_ell", c.op.Lambda_ell);
    rd.number("operator.eps", c.op.eps);
    {
        const auto names = operator_preset_names();
        if (std::find(names.begin(), names.end(), c.op.coefficients) == names.end())
            rd.bad("operator.coefficients", "unknown preset '" + c.op.coefficients + "'");
    }
    if (c.op.lambda_ell && !(*c.op.lambda_ell > 0.0)) rd.bad("operator.lambda_ell", "must be positive");
    if (c.op.Lambda_ell && !(*c.op.Lambda_ell > 0.0)) rd.bad("operator.Lambda_ell", "must be positive");
    if (c.op.lambda_ell && c.op.Lambda_ell && *c.op.lambda_ell > *c.op.Lambda_ell)
        rd.bad("operator.lambda_ell", "lambda_ell exceeds Lambda_ell");
    if (c.op.eps && !(*c.op.eps >= 0.0)) rd.bad("operator.eps", "must be non-negative");

    rd.number("grid.h0", c.grid.h0);
    rd.number("grid.h", c.grid.h);
    rd.number("grid.tau", c.grid.tau);
    rd.number("grid.T", c.grid.T);
    rd.text("grid.scheme", c.grid.scheme);
    for (const auto& [key, v] : {std::pair{"grid.h0", c.grid.h0}, std::pair{"grid.h", c.grid.h},
                                  std::pair{"grid.tau", c.grid.tau}, std::pair{"grid.T", c.grid.T}})
        if (!(v > 0.0)) rd.bad(key, "must be positive");
    if (c.grid.scheme != "implicit-euler" && c.grid.scheme != "crank-nicolson" && c.grid.scheme != "ie" &&
        c.grid.scheme != "cn")
        rd.bad("grid.scheme", "expected implicit-euler or crank-nicolson");

    auto& e = c.experiment;
    rd.number("experiment.d", e.d);
    rd.integer("experiment.k", e.k);
    rd.number("experiment.delta", e.delta);
    rd.number("experiment.sigma", e.sigma);
    rd.numbers("experiment.radii", e.radii);
    rd.seeds("experiment.seeds", e.seeds);
    rd.integer("experiment.M", e.M);
    rd.integer("experiment.m0", e.m0);
    rd.integer("experiment.ell", e.ell);
    rd.number("experiment.alpha", e.alpha);
    rd.numbers("experiment.alphas", e.alphas);
    rd.number("experiment.r", e.r);
    rd.number("experiment.R", e.R);
    rd.integer("experiment.K", e.K);
    rd.text("experiment.source", e.source);
    rd.number("experiment.mu_max", e.mu_max);
    rd.integer("experiment.nodes", e.nodes);
    rd.integer("experiment.count", e.count);
    rd.text("experiment.method", e.method);
    rd.numbers("experiment.ladder", e.ladder);
    rd.integer("experiment.kernel_points", e.kernel_points);
    rd.number("experiment.margin", e.margin);
    rd.numbers("experiment.center", e.center);
    rd.number("experiment.C_mv", e.C_mv);
    if (e.d && !(*e.d > 0.0)) rd.bad("experiment.d", "must be positive");
    if (e.k < 1) rd.bad("experiment.k", "must be at least 1");
    if (e.delta && !(*e.delta > 0.0)) rd.bad("experiment.delta", "must be positive");
    if (e.sigma && !(*e.sigma > 0.0)) rd.bad("experiment.sigma", "must be positive");
    for (double r : e.radii)
        if (!(r > 0.0)) rd.bad("experiment.radii", "radii must be positive");
    if (e.M < 0) rd.bad("experiment.M", "must be non-negative (0 selects the default)");
    if (e.m0 < 0) rd.bad("experiment.m0", "must be non-negative");
    if (e.ell < 0) rd.bad("experiment.ell", "must be non-negative (0 selects k)");
    if (!(e.r > 0.0)) rd.bad("experiment.r", "must be positive");
    if (!(e.R > e.r)) rd.bad("experiment.R", "R must exceed r");
    if (e.K < 1) rd.bad("experiment.K", "must be at least 1");
    if (e.source != "closed" && e.source != "field") rd.bad("experiment.source", "expected closed or field");
    if (!(e.mu_max > 0.0)) rd.bad("experiment.mu_max", "must be positive");
    if (e.nodes < 3) rd.bad("experiment.nodes", "need at least 3 nodes");
    if (e.count < 1) rd.bad("experiment.count", "must be at least 1");
    if (e.method != "closed-form" && e.method != "quadrature")
        rd.bad("experiment.method", "expected closed-form or quadrature");
    for (double dl : e.ladder)
        if (!(dl > 0.0 && dl <= 1.0)) rd.bad("experiment.ladder", "ladder entries must lie in (0, 1]");
    if (e.kernel_points < 1) rd.bad("experiment.kernel_points", "must be at least 1");
    if (!(e.margin > 1.0)) rd.bad("experiment.margin", "must exceed 1");
    if (!e.center.empty()) {
        if (static_cast<int>(e.center.size()) != c.domain.n + 2)
            rd.bad("experiment.center", "expected t, x0 and " + std::to_string(c.domain.n) + " cross coordinates");
        if (e.center.front() > 0.0) rd.bad("experiment.center", "t must be <= 0");
    }
    if (e.C_mv < 0.0) rd.bad("experiment.C_mv", "must be non-negative (0 selects the calibrated default)");

    rd.text("output.dir", c.output.dir);
    rd.words("output.formats", c.output.formats);
    rd.text("output.prefix", c.output.prefix);
    for (const auto& f : c.output.formats)
        if (f != "json" && f != "csv") rd.bad("output.formats", "unknown format '" + f + "'");

    rd.reject_unknown();
    return c;
}

StripDomain ExperimentConfig::make_domain() const {
    try {
        return StripDomain(domain.lengths, domain.X);
    } catch (const Error& e) {
        fail(ErrorCategory::Config, std::string("domain section: ") + e.what());
    }
}

OperatorCoefficients ExperimentConfig::make_operator() const {
    OperatorCoefficients o = operator_preset(op.coefficients);
    if (op.lambda_ell) o.lambda_ell = *op.lambda_ell;
    if (op.Lambda_ell) o.Lambda_ell = *op.Lambda_ell;
    if (op.eps) o.eps = *op.eps;
    return o;
}

SpaceTimeGrid ExperimentConfig::make_grid() const {
    try {
        return SpaceTimeGrid::from_spacing(make_domain(), grid.T, grid.tau, grid.h0, grid.h);
    } catch (const Error& e) {
        fail(ErrorCategory::Config, std::string("grid section: ") + e.what());
    }
}

TimeScheme ExperimentConfig::scheme() const { return time_scheme_from_string(grid.scheme); }

bool ExperimentConfig::wants(const std::string& format) const {
    return std::find(output.formats.begin(), output.formats.end(), format) != output.formats.end();
}

} // namespace ancient
