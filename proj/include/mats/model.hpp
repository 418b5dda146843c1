#pragma once

#include "mats/linalg.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace mats {

using linalg::Index;
using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;

/// `a` groups of d-variate observations; group i is an n_i x d block.
///
/// Every group needs at least two rows and all entries must be finite.
class GroupedSample {
public:
    GroupedSample() = default;
    explicit GroupedSample(std::vector<Matrix> groups, std::vector<std::string> labels = {});

    [[nodiscard]] Index groups() const noexcept { return static_cast<Index>(groups_.size()); }
    [[nodiscard]] Index dim() const noexcept { return dim_; }
    [[nodiscard]] const Matrix& group(Index i) const { return groups_.at(static_cast<std::size_t>(i)); }
    [[nodiscard]] const std::vector<Matrix>& blocks() const noexcept { return groups_; }
    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] std::vector<Index> sizes() const;
    [[nodiscard]] Index total() const noexcept;

    friend bool operator==(const GroupedSample& lhs, const GroupedSample& rhs);

private:
    std::vector<Matrix> groups_;
    std::vector<std::string> labels_;
    Index dim_ = 0;
};

/// Plug-in estimators of the heteroscedastic model.
struct EstimatorSet {
    Vector mean_vector;                // stacked group means, length a*d
    std::vector<SymMatrix> group_covs; // V_i with divisor n_i - 1
    SymMatrix sigma_hat;               // direct sum of (N / n_i) V_i
    Vector d_hat_diag;                 // diagonal of sigma_hat
    std::vector<Index> n;
    Index N = 0;
    Index a = 0;
    Index d = 0;
    Index zero_variance_components = 0;

    /// D_N as a dense diagonal matrix.
    [[nodiscard]] SymMatrix d_hat() const;
};

enum class VariancePolicy {
    require_positive,  // zero empirical variance throws DegenerateVarianceError
    allow_zero,        // used for bootstrap replicates; zeros are counted
};

[[nodiscard]] EstimatorSet estimate(const GroupedSample& sample,
                                    VariancePolicy policy = VariancePolicy::require_positive);

}  // namespace mats
