#pragma once

#include "mats/inference.hpp"
#include "mats/model.hpp"
#include "mats/resample.hpp"
#include "mats/stats.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mats::cli {

enum class Subcommand { test, ci, simulate, power };
enum class OutputFormat { json, csv, text };

/// Parsed --hypothesis value: one-way | two-way=AxB | matrix=<file>.
struct HypothesisChoice {
    enum class Kind { one_way, two_way, matrix } kind = Kind::one_way;
    Index a = 0;  // two-way factor levels
    Index b = 0;
    std::string path;  // matrix file
};

/// Parsed --method value: pbs | wild | npbs | wts-pbs | wts-chi2.
struct MethodChoice {
    std::string name = "pbs";
    TestStatistic statistic = TestStatistic::mats;
    BootstrapMethod bootstrap = BootstrapMethod::parametric;
    bool chi2 = false;  // wts-chi2: no resampling
};

struct AnalysisRequest {
    Subcommand subcommand = Subcommand::test;
    std::string data_path;
    std::string group_column;
    std::vector<std::string> value_columns;
    std::string hypothesis = "one-way";
    std::string method = "pbs";
    std::size_t B = 1000;
    double alpha = 0.05;
    std::optional<std::uint64_t> seed;
    OutputFormat output = OutputFormat::json;
    std::string contrasts_path;  // ci
    Aggregate aggregate = Aggregate::sum;
    std::string config_path;  // simulate / power
    unsigned workers = 1;
};

[[nodiscard]] HypothesisChoice parse_hypothesis(std::string_view s);
[[nodiscard]] MethodChoice parse_method_choice(std::string_view s);

/// Reads a headed CSV. Rows are grouped by `group_column` in order of first
/// appearance; `value_columns` give the d components in the listed order.
[[nodiscard]] GroupedSample ingest_csv(const std::string& path, const std::string& group_column,
                                       const std::vector<std::string>& value_columns);
[[nodiscard]] GroupedSample parse_csv(std::istream& in, const std::string& group_column,
                                      const std::vector<std::string>& value_columns,
                                      std::string_view source = "<input>");

/// Writes the sample back as CSV, group by group, with shortest round-trip
/// number formatting.
void write_normalized_csv(std::ostream& out, const GroupedSample& sample, const std::string& group_column,
                          const std::vector<std::string>& value_columns);

/// Headerless numeric CSV, one matrix row per line.
[[nodiscard]] Matrix read_matrix_csv(const std::string& path);

/// Hypotheses to test for a sample with `a` groups of dimension d. A two-way
/// layout yields factor A, factor B and interaction, with groups read as
/// cells in row-major order.
[[nodiscard]] std::vector<HypothesisSpec> build_hypotheses(const HypothesisChoice& choice, Index a, Index d);

/// Executes the request. Returns 0 on success, 2 on input errors and 1 on
/// internal errors; diagnostics go to `err`.
int run(const AnalysisRequest& request, std::ostream& out, std::ostream& err);

/// Parses argv and calls run().
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mats::cli
