#include "mats/resample.hpp"

#include "mats/error.hpp"
#include "mats/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mats {

std::string_view to_string(BootstrapMethod m) noexcept {
    switch (m) {
    case BootstrapMethod::parametric: return "parametric";
    case BootstrapMethod::wild: return "wild";
    case BootstrapMethod::nonparametric: return "nonparametric";
    }
    return "?";
}

std::string_view to_string(WildWeights w) noexcept {
    switch (w) {
    case WildWeights::standard_normal: return "standard_normal";
    case WildWeights::rademacher: return "rademacher";
    }
    return "?";
}

std::string_view to_string(TestStatistic s) noexcept {
    switch (s) {
    case TestStatistic::mats: return "mats";
    case TestStatistic::wts: return "wts";
    }
    return "?";
}

namespace detail {

Matrix parametric_block(const SymMatrix& root, Index n, Philox& rng) {
    const Index d = root.dim();
    std::normal_distribution<double> normal;
    Matrix z(n, d);
    for (Index k = 0; k < n; ++k) {
        for (Index s = 0; s < d; ++s) {
            z(k, s) = normal(rng);
        }
    }
    // Row k is (R z_k)^T = z_k^T R since R is symmetric.
    return z * root.matrix();
}

Matrix wild_block(const Matrix& x, WildWeights law, Philox& rng) {
    const Vector mean = x.colwise().mean().transpose();
    Matrix out(x.rows(), x.cols());
    std::normal_distribution<double> normal;
    for (Index k = 0; k < x.rows(); ++k) {
        double w = 0.0;
        if (law == WildWeights::standard_normal) {
            w = normal(rng);
        } else {
            w = (rng() >> 63) != 0 ? 1.0 : -1.0;
        }
        out.row(k) = w * (x.row(k) - mean.transpose());
    }
    return out;
}

Matrix nonparametric_block(const Matrix& x, Philox& rng) {
    const Index n = x.rows();
    std::uniform_int_distribution<Index> pick(0, n - 1);
    Matrix out(n, x.cols());
    for (Index k = 0; k < n; ++k) {
        out.row(k) = x.row(pick(rng));
    }
    return out;
}

}  // namespace detail

GroupedSample parametric_resample(const EstimatorSet& est, Philox& rng) {
    std::vector<Matrix> blocks;
    blocks.reserve(est.group_covs.size());
    for (std::size_t i = 0; i < est.group_covs.size(); ++i) {
        const SymMatrix root = linalg::psd_sqrt(est.group_covs[i]);
        blocks.push_back(detail::parametric_block(root, est.n[i], rng));
    }
    return GroupedSample(std::move(blocks));
}

GroupedSample wild_resample(const GroupedSample& sample, WildWeights law, Philox& rng) {
    std::vector<Matrix> blocks;
    blocks.reserve(sample.blocks().size());
    for (const Matrix& x : sample.blocks()) {
        blocks.push_back(detail::wild_block(x, law, rng));
    }
    return GroupedSample(std::move(blocks), sample.labels());
}

GroupedSample wild_resample_with_weights(const GroupedSample& sample, std::span<const Vector> weights) {
    if (static_cast<Index>(weights.size()) != sample.groups()) {
        throw DimensionError("need one weight vector per group");
    }
    std::vector<Matrix> blocks;
    blocks.reserve(weights.size());
    for (Index i = 0; i < sample.groups(); ++i) {
        const Matrix& x = sample.group(i);
        const Vector& w = weights[static_cast<std::size_t>(i)];
        if (w.size() != x.rows()) {
            throw DimensionError("weight vector length must equal group size");
        }
        const Vector mean = x.colwise().mean().transpose();
        Matrix out = x.rowwise() - mean.transpose();
        out = w.asDiagonal() * out;
        blocks.push_back(std::move(out));
    }
    return GroupedSample(std::move(blocks), sample.labels());
}

GroupedSample nonparametric_resample(const GroupedSample& sample, Philox& rng) {
    std::vector<Matrix> blocks;
    blocks.reserve(sample.blocks().size());
    for (const Matrix& x : sample.blocks()) {
        blocks.push_back(detail::nonparametric_block(x, rng));
    }
    return GroupedSample(std::move(blocks), sample.labels());
}

ReplicateSet bootstrap_distribution(const GroupedSample& sample,
                                    const EstimatorSet& est,
                                    const BootstrapConfig& config,
                                    const ReplicateStatistic& statistic) {
    if (config.B == 0) {
        throw ContractError("bootstrap needs B >= 1");
    }
    const Index a = sample.groups();
    std::vector<std::uint64_t> streams = config.group_streams;
    if (streams.empty()) {
        for (Index i = 0; i < a; ++i) {
            streams.push_back(static_cast<std::uint64_t>(i));
        }
    } else if (static_cast<Index>(streams.size()) != a) {
        throw ContractError("group_streams must list one stream id per group");
    }

    std::vector<SymMatrix> roots;
    if (config.method == BootstrapMethod::parametric) {
        roots.reserve(est.group_covs.size());
        for (const SymMatrix& v : est.group_covs) {
            roots.push_back(linalg::psd_sqrt(v));
        }
    }

    ReplicateSet out;
    out.values.assign(config.B, 0.0);
    std::vector<unsigned char> degenerate(config.B, 0);

    parallel_for(config.B, config.workers, [&](std::size_t b) {
        std::vector<Matrix> blocks;
        blocks.reserve(static_cast<std::size_t>(a));
        for (Index i = 0; i < a; ++i) {
            const auto gi = static_cast<std::size_t>(i);
            Philox rng(config.seed, derive_stream({static_cast<std::uint64_t>(b), streams[gi]}));
            switch (config.method) {
            case BootstrapMethod::parametric:
                blocks.push_back(detail::parametric_block(roots[gi], sample.group(i).rows(), rng));
                break;
            case BootstrapMethod::wild:
                blocks.push_back(detail::wild_block(sample.group(i), config.wild_weights, rng));
                break;
            case BootstrapMethod::nonparametric:
                blocks.push_back(detail::nonparametric_block(sample.group(i), rng));
                break;
            }
        }
        EstimatorSet boot = estimate(GroupedSample(std::move(blocks)), VariancePolicy::allow_zero);
        if (config.method == BootstrapMethod::nonparametric) {
            boot.mean_vector -= est.mean_vector;
        }
        degenerate[b] = boot.zero_variance_components > 0 ? 1 : 0;
        out.values[b] = statistic(boot);
    });

    out.degenerate = static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
    return out;
}

double empirical_quantile(std::span<const double> values, double level) {
    if (values.empty()) {
        throw ContractError("quantile of an empty replicate set");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw ContractError("quantile level must lie in (0, 1)");
    }
    const auto count = static_cast<double>(values.size());
    // Small slack so that e.g. 0.95 * 1000 lands on 950, not 951.
    auto k = static_cast<std::size_t>(std::ceil(level * count - 1e-9));
    k = std::clamp<std::size_t>(k, 1, values.size());
    std::vector<double> sorted(values.begin(), values.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
    return sorted[k - 1];
}

double bootstrap_p_value(double observed, std::span<const double> values) {
    if (values.empty()) {
        throw ContractError("p-value of an empty replicate set");
    }
    const auto hits = std::count_if(values.begin(), values.end(), [&](double r) { return observed <= r; });
    return static_cast<double>(hits) / static_cast<double>(values.size());
}

BootstrapResult bootstrap_test(const GroupedSample& sample,
                               const HypothesisSpec& hyp,
                               const BootstrapConfig& config,
                               TestStatistic statistic) {
    const EstimatorSet est = estimate(sample);

    BootstrapResult result;
    result.statistic = statistic;
    result.config = config;

    ReplicateStatistic stat;
    if (statistic == TestStatistic::mats) {
        result.observed = mats_statistic(est, hyp);
        stat = [&hyp](const EstimatorSet& boot) {
            return detail::diag_quadratic(boot.mean_vector, boot.d_hat_diag, hyp.T, boot.N);
        };
    } else {
        result.observed = wts_statistic(est, hyp);
        stat = [&hyp](const EstimatorSet& boot) {
            return detail::dense_quadratic(boot.mean_vector, boot.sigma_hat, hyp.T, boot.N);
        };
    }

    ReplicateSet reps = bootstrap_distribution(sample, est, config, stat);
    result.replicates = std::move(reps.values);
    result.n_degenerate_replicates = reps.degenerate;
    result.p_value = bootstrap_p_value(result.observed, result.replicates);
    result.quantile_95 = empirical_quantile(result.replicates, 0.95);
    return result;
}

}  // namespace mats
