#pragma once

#include "ancient/cm.hpp"
#include "ancient/estimates.hpp"
#include "ancient/fd_solver.hpp"
#include "ancient/geometry.hpp"
#include "ancient/quadrature.hpp"
#include "ancient/solutions.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace ancient {

using Json = nlohmann::ordered_json;

/// %.17g; non-finite values become "inf", "-inf", "nan".
std::string format_number(double v);

/// Deterministic JSON text. Floating-point values are written with 17
/// significant digits (non-finite ones as strings), keys in insertion order.
std::string dump_json(const Json& j, int indent = 2);
Json parse_json(const std::string& text, const std::string& source = "<json>");
Json load_json(const std::string& path);

/// Writes to `path.tmp` and renames over `path`. Creates missing directories.
void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    std::string str() const;
};

std::string csv_cell(double v);
std::string csv_cell(long long v);
inline std::string csv_cell(int v) { return csv_cell(static_cast<long long>(v)); }
inline std::string csv_cell(std::size_t v) { return csv_cell(static_cast<long long>(v)); }
std::string csv_cell(const std::string& s);

Json to_json(const Vector& v);
Json to_json(const Matrix& m);
/// row, col, value.
CsvTable matrix_csv(const Matrix& m);

Json to_json(const StripDomain& d);
StripDomain domain_from_json(const Json& j);
Json to_json(const Mode& m);
/// k-index, mu, normalization.
CsvTable modes_csv(const std::vector<Mode>& modes);

Json to_json(const SeparatedSolution& u);
SeparatedSolution solution_from_json(const Json& j, const StripDomain& domain);
Json to_json(const SolutionSpan& s);
SolutionSpan span_from_json(const Json& j);

/// r, snapped_r, method, basis_ids, log_scale.
Json gram_header(const GramMatrix& g);
/// row, col, value of the materialized entries.
CsvTable gram_csv(const GramMatrix& g);

Json to_json(const CoefficientReport& r);
/// Header fields of the binary field layout plus provenance, as text.
Json field_sidecar(const SolutionField& f);

Json to_json(const EstimateReport& r);
Json to_json(const GrowthIterationReport& r);
Json to_json(const GrowthExponent& g);
Json to_json(const LiouvilleProbe& p);

Json to_json(const MonotoneTable& t);
Json to_json(const FPropertiesReport& r);
Json to_json(const SelectionReport& s);
Json to_json(const GoodBasis& b);
Json to_json(const KernelTrace& k);
Json to_json(const TraceBoundReport& t);
Json to_json(const DeltaLadder& l);
Json to_json(const DimensionReport& r);

struct CompareOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    /// Per-field relative tolerance, keyed by JSON pointer prefix
    /// ("/results/0/lhs" or "/results").
    std::map<std::string, double> field_rtol;
    /// Top-level keys left out of the comparison.
    std::vector<std::string> ignore{"metadata"};
};

struct ReportDifference {
    std::string path;
    std::string baseline;
    std::string current;
};

/// Field-by-field diff; numbers compare within tolerance, everything else exactly.
std::vector<ReportDifference> compare_reports(const Json& baseline, const Json& current,
                                              const CompareOptions& opt = {});

} // namespace ancient
