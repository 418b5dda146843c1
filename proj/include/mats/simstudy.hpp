#pragma once

#include "mats/model.hpp"
#include "mats/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mats {

enum class Layout { one_way, two_way_2x2 };
enum class CovSetting { S1, S2, S3, S4, S5, S6, S7, S8, S9, S10, S11 };
enum class ErrorLaw { normal, chi2_3, lognormal, t3, double_exponential };
enum class StudyHypothesis { group, factor_a, factor_b, interaction };
enum class Method { wts_chi2, wts_pbs, mats_wild, mats_pbs, mats_npbs };

[[nodiscard]] std::string_view to_string(Layout v) noexcept;
[[nodiscard]] std::string_view to_string(CovSetting v) noexcept;
[[nodiscard]] std::string_view to_string(ErrorLaw v) noexcept;
[[nodiscard]] std::string_view to_string(StudyHypothesis v) noexcept;
[[nodiscard]] std::string_view to_string(Method v) noexcept;

// Inverse of to_string; throw InputError on unknown names.
[[nodiscard]] Layout parse_layout(std::string_view s);
[[nodiscard]] CovSetting parse_cov_setting(std::string_view s);
[[nodiscard]] ErrorLaw parse_error_law(std::string_view s);
[[nodiscard]] StudyHypothesis parse_study_hypothesis(std::string_view s);
[[nodiscard]] Method parse_method(std::string_view s);

[[nodiscard]] const std::vector<Method>& all_methods();

struct SimulationConfig {
    Layout layout = Layout::one_way;
    Index d = 4;
    CovSetting cov_setting = CovSetting::S1;
    ErrorLaw error_law = ErrorLaw::normal;
    std::vector<Index> sample_sizes{10, 10};
    double shift = 0.0;  // added to every component of the last group / cell
    StudyHypothesis hypothesis = StudyHypothesis::group;
    std::size_t nsim = 2000;
    std::size_t nboot = 1000;
    std::vector<Method> methods = all_methods();
    double alpha = 0.05;
    std::uint64_t seed = 0;
    unsigned workers = 1;  // replication workers; results do not depend on it

    /// Test hook: generated group g is analysed at position group_order[g]
    /// and keeps its bootstrap stream. Empty means identity.
    std::vector<Index> group_order;

    /// Throws InputError describing the first violated constraint.
    void validate() const;
};

/// V_i (one-way, index = group 0..1) or V_ij (two-way, index = row-major
/// cell 0..3) for the given setting.
[[nodiscard]] SymMatrix covariance_setting(CovSetting id, Index d, Index index);

/// Standardized error draws: mean 0 and variance 1 under every law.
class ErrorSampler {
public:
    explicit ErrorSampler(ErrorLaw law) noexcept : law_(law) {}
    double operator()(Philox& rng) const;
    [[nodiscard]] ErrorLaw law() const noexcept { return law_; }

private:
    ErrorLaw law_;
};

/// X_ik = mu_i + V_i^{1/2} eps_ik. Deterministic in (config.seed, rep).
[[nodiscard]] GroupedSample generate_dataset(const SimulationConfig& config, std::size_t rep);

struct MethodResult {
    Method method = Method::mats_pbs;
    std::size_t rejections = 0;
    double rejection_rate = 0.0;
    double monte_carlo_se = 0.0;
};

struct StudyReport {
    SimulationConfig config;
    std::vector<MethodResult> results;  // in config.methods order
    double elapsed_seconds = 0.0;

    [[nodiscard]] const MethodResult& at(Method m) const;
};

[[nodiscard]] double monte_carlo_se(double rate, std::size_t nsim);

[[nodiscard]] StudyReport run_study(const SimulationConfig& config);

/// One report per shift; every run shares config.seed.
[[nodiscard]] std::vector<StudyReport> run_power_study(const SimulationConfig& config,
                                                       const std::vector<double>& delta_grid);

void write_csv_header(std::ostream& out);
/// One row per method.
void write_csv_rows(std::ostream& out, const StudyReport& report);
[[nodiscard]] std::string to_json(const StudyReport& report);

/// Flat JSON object; missing keys keep their defaults except "seed", which is
/// required.
[[nodiscard]] SimulationConfig config_from_json(std::string_view text);

}  // namespace mats
