#pragma once

#include "mats/model.hpp"
#include "mats/rng.hpp"
#include "mats/stats.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace mats {

enum class BootstrapMethod { parametric, wild, nonparametric };
enum class WildWeights { standard_normal, rademacher };
enum class TestStatistic { mats, wts };

[[nodiscard]] std::string_view to_string(BootstrapMethod m) noexcept;
[[nodiscard]] std::string_view to_string(WildWeights w) noexcept;
[[nodiscard]] std::string_view to_string(TestStatistic s) noexcept;

struct BootstrapConfig {
    BootstrapMethod method = BootstrapMethod::parametric;
    std::size_t B = 1000;
    WildWeights wild_weights = WildWeights::standard_normal;  // wild only
    std::uint64_t seed = 0;
    unsigned workers = 1;  // 0 = hardware concurrency; output does not depend on it

    /// Stream id used for each group position; empty means 0, 1, ..., a-1.
    /// Permuting groups together with their ids reproduces the replicate
    /// draws group by group.
    std::vector<std::uint64_t> group_streams;
};

struct BootstrapResult {
    TestStatistic statistic = TestStatistic::mats;
    double observed = 0.0;
    std::vector<double> replicates;  // in replicate order b = 0..B-1
    double p_value = 1.0;
    double quantile_95 = 0.0;
    std::size_t n_degenerate_replicates = 0;
    BootstrapConfig config;
};

// ---------------------------------------------------------------------------
// Resamplers. Each consumes the generator group by group in group order.

/// Group i: n_i draws of psd_sqrt(V_i) * z with z standard normal.
[[nodiscard]] GroupedSample parametric_resample(const EstimatorSet& est, Philox& rng);

/// Group i, row k: W_ik * (X_ik - Xbar_i) with iid mean-0, variance-1 weights.
[[nodiscard]] GroupedSample wild_resample(const GroupedSample& sample, WildWeights law, Philox& rng);

/// Same as wild_resample with caller-supplied weights (one vector per group).
[[nodiscard]] GroupedSample wild_resample_with_weights(const GroupedSample& sample,
                                                       std::span<const Vector> weights);

/// Group i: n_i rows drawn with replacement from group i.
[[nodiscard]] GroupedSample nonparametric_resample(const GroupedSample& sample, Philox& rng);

namespace detail {

[[nodiscard]] Matrix parametric_block(const SymMatrix& root, Index n, Philox& rng);
[[nodiscard]] Matrix wild_block(const Matrix& x, WildWeights law, Philox& rng);
[[nodiscard]] Matrix nonparametric_block(const Matrix& x, Philox& rng);

}  // namespace detail

// ---------------------------------------------------------------------------
// Bootstrap distribution of an arbitrary statistic.

/// Evaluated on the estimator set of one bootstrap sample. For the
/// nonparametric method the mean vector is already centred at the original
/// group means, so every statistic sees a null-centred replicate.
using ReplicateStatistic = std::function<double(const EstimatorSet& boot)>;

struct ReplicateSet {
    std::vector<double> values;
    std::size_t degenerate = 0;  // replicates with a zero-variance component
};

/// Draws config.B bootstrap samples; replicate b uses, for group i, the
/// Philox stream derive_stream({b, group_stream(i)}) under key config.seed.
[[nodiscard]] ReplicateSet bootstrap_distribution(const GroupedSample& sample,
                                                  const EstimatorSet& est,
                                                  const BootstrapConfig& config,
                                                  const ReplicateStatistic& statistic);

/// Full test: observed statistic, B replicates, p-value
/// (1/B) #{b : observed <= replicate_b} and the 95% quantile.
[[nodiscard]] BootstrapResult bootstrap_test(const GroupedSample& sample,
                                             const HypothesisSpec& hyp,
                                             const BootstrapConfig& config,
                                             TestStatistic statistic = TestStatistic::mats);

/// The ceil(level * B)-th order statistic of `values` (1-based).
[[nodiscard]] double empirical_quantile(std::span<const double> values, double level);

/// (1/B) #{b : observed <= values_b}.
[[nodiscard]] double bootstrap_p_value(double observed, std::span<const double> values);

}  // namespace mats
