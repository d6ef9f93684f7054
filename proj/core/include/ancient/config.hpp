#pragma once

#include "ancient/fd_solver.hpp"
#include "ancient/geometry.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ancient {

/// Plain `key = value` text, one entry per line, `#` starts a comment.
/// Keys carry dotted section prefixes (`domain.lengths`). Later entries
/// override earlier ones only through set(); a duplicate in the file is an
/// error.
class KeyValueConfig {
public:
    struct Entry {
        std::string value;
        int line = 0; ///< 0 for values set programmatically
    };

    static KeyValueConfig parse(const std::string& text, const std::string& source = "<config>");
    static KeyValueConfig load(const std::string& path);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
    const std::string& source() const noexcept { return source_; }

    /// "key (file:line)" for error messages.
    std::string where(const std::string& key) const;

private:
    std::string source_ = "<config>";
    std::map<std::string, Entry> entries_;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;

    struct Domain {
        int n = 1;
        std::vector<double> lengths{1.0};
        double X = 4.0;
    } domain;

    struct Operator {
        std::string coefficients = "laplacian";
        std::optional<double> lambda_ell;
        std::optional<double> Lambda_ell;
        std::optional<double> eps;
    } op;

    struct Grid {
        double h0 = 0.1;
        double h = 0.1;
        double tau = 0.02;
        double T = 9.0;
        std::string scheme = "crank-nicolson";
    } grid;

    struct Experiment {
        std::optional<double> d;
        int k = 3;
        std::optional<double> delta;
        std::optional<double> sigma;
        std::vector<double> radii;
        std::vector<std::uint64_t> seeds;
        int M = 0;
        int m0 = 1;
        int ell = 0;
        double alpha = 4.0;
        std::vector<double> alphas;
        double r = 1.0;
        double R = 2.0;
        int K = 4;
        std::string source = "closed";
        double mu_max = 100.0;
        int nodes = 2000;
        int count = 5;
        std::string method = "closed-form";
        std::vector<double> ladder{1.0, 0.5, 0.25};
        int kernel_points = 16;
        double margin = 10.0;
        std::vector<double> center; ///< t, x0, cross coordinates; empty: (0, 0, L/2)
        double C_mv = 0.0; ///< 0: calibrated default
    } experiment;

    struct Output {
        std::string dir = ".";
        std::vector<std::string> formats{"json", "csv"};
        std::string prefix;
    } output;

    /// Converts and validates every key; unknown keys are rejected with their
    /// line. Throws Error(Config).
    static ExperimentConfig from(const KeyValueConfig& kv);

    StripDomain make_domain() const;
    OperatorCoefficients make_operator() const;
    SpaceTimeGrid make_grid() const;
    TimeScheme scheme() const;
    bool wants(const std::string& format) const;

    /// Every recognised key.
    static const std::vector<std::string>& known_keys();
};

} // namespace ancient
