#include "mats/model.hpp"

#include "mats/error.hpp"

#include <cmath>
#include <sstream>

namespace mats {

GroupedSample::GroupedSample(std::vector<Matrix> groups, std::vector<std::string> labels)
    : groups_(std::move(groups)), labels_(std::move(labels)) {
    if (groups_.empty()) {
        throw InputError("grouped sample needs at least one group");
    }
    dim_ = groups_.front().cols();
    if (dim_ == 0) {
        throw DimensionError("observations must have at least one component");
    }
    for (std::size_t i = 0; i < groups_.size(); ++i) {
        const Matrix& g = groups_[i];
        if (g.cols() != dim_) {
            std::ostringstream os;
            os << "group " << i << " has " << g.cols() << " components, expected " << dim_;
            throw DimensionError(os.str());
        }
        if (g.rows() < 2) {
            std::ostringstream os;
            os << "group " << i << " has " << g.rows() << " observation(s); at least 2 are required";
            throw InputError(os.str());
        }
        if (!g.allFinite()) {
            std::ostringstream os;
            os << "group " << i << " contains non-finite values";
            throw InputError(os.str());
        }
    }
    if (!labels_.empty() && labels_.size() != groups_.size()) {
        throw InputError("number of group labels does not match number of groups");
    }
}

std::vector<Index> GroupedSample::sizes() const {
    std::vector<Index> n;
    n.reserve(groups_.size());
    for (const Matrix& g : groups_) {
        n.push_back(g.rows());
    }
    return n;
}

Index GroupedSample::total() const noexcept {
    Index total = 0;
    for (const Matrix& g : groups_) {
        total += g.rows();
    }
    return total;
}

bool operator==(const GroupedSample& lhs, const GroupedSample& rhs) {
    if (lhs.groups_.size() != rhs.groups_.size() || lhs.labels_ != rhs.labels_) {
        return false;
    }
    for (std::size_t i = 0; i < lhs.groups_.size(); ++i) {
        const Matrix& a = lhs.groups_[i];
        const Matrix& b = rhs.groups_[i];
        if (a.rows() != b.rows() || a.cols() != b.cols() || a != b) {
            return false;
        }
    }
    return true;
}

SymMatrix EstimatorSet::d_hat() const {
    return SymMatrix::symmetrized(Matrix(d_hat_diag.asDiagonal()));
}

EstimatorSet estimate(const GroupedSample& sample, VariancePolicy policy) {
    const Index a = sample.groups();
    const Index d = sample.dim();
    const Index total = sample.total();

    EstimatorSet est;
    est.a = a;
    est.d = d;
    est.N = total;
    est.n = sample.sizes();
    est.mean_vector.resize(a * d);
    est.d_hat_diag.resize(a * d);
    est.group_covs.reserve(static_cast<std::size_t>(a));

    Matrix sigma = Matrix::Zero(a * d, a * d);
    for (Index i = 0; i < a; ++i) {
        const Matrix& x = sample.group(i);
        const Index n = x.rows();

        // Sequential sums over k keep results independent of any threading.
        Vector mean = Vector::Zero(d);
        for (Index k = 0; k < n; ++k) {
            mean += x.row(k).transpose();
        }
        mean /= static_cast<double>(n);

        Matrix cov = Matrix::Zero(d, d);
        Vector r(d);
        for (Index k = 0; k < n; ++k) {
            r = x.row(k).transpose() - mean;
            for (Index s = 0; s < d; ++s) {
                for (Index t = s; t < d; ++t) {
                    cov(s, t) += r(s) * r(t);
                }
            }
        }
        for (Index s = 0; s < d; ++s) {
            for (Index t = s; t < d; ++t) {
                cov(s, t) /= static_cast<double>(n - 1);
                cov(t, s) = cov(s, t);
            }
        }

        // A constant column has exactly zero variance; rounding in the mean
        // would otherwise leave a ~1e-34 residue.
        for (Index s = 0; s < d; ++s) {
            if (x.col(s).maxCoeff() == x.col(s).minCoeff()) {
                cov.row(s).setZero();
                cov.col(s).setZero();
                ++est.zero_variance_components;
                if (policy == VariancePolicy::require_positive) {
                    std::ostringstream os;
                    os << "component " << s << " of group " << i << " has zero empirical variance";
                    throw DegenerateVarianceError(os.str());
                }
            }
        }

        const double scale = static_cast<double>(total) / static_cast<double>(n);
        est.mean_vector.segment(i * d, d) = mean;
        sigma.block(i * d, i * d, d, d) = scale * cov;
        est.d_hat_diag.segment(i * d, d) = scale * cov.diagonal();
        est.group_covs.push_back(SymMatrix::symmetrized(cov));
    }
    est.sigma_hat = SymMatrix::symmetrized(sigma);
    return est;
}

}  // namespace mats
