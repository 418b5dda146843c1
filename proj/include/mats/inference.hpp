#pragma once

#include "mats/model.hpp"
#include "mats/resample.hpp"

#include <vector>

namespace mats {

/// Bootstrap confidence ellipsoid for H mu, reported in the eigenbasis of
/// H D_N H^T: axis s has direction axes.col(s) and half-length
/// sqrt(eigenvalues(s) * quantile / N).
struct ConfidenceEllipsoid {
    Vector center;        // H xbar
    Vector eigenvalues;   // of H D_N H^T, descending, clamped at 0
    Matrix axes;          // orthonormal columns
    Vector axis_lengths;  // descending
    double level = 0.95;
    double quantile = 0.0;
    Index N = 0;
};

enum class Aggregate { sum, max };

struct SimultaneousCIs {
    Matrix contrasts;  // row l is h_l^T
    Vector estimates;  // h_l^T xbar
    Vector half_widths;
    Vector lower;
    Vector upper;
    double level = 0.95;
    double quantile = 0.0;  // bootstrap quantile of the aggregate statistic
    Aggregate kind = Aggregate::sum;
    std::size_t n_degenerate_replicates = 0;
};

/// N (H xbar - H mu0)^T (H D_N H^T)^+ (H xbar - H mu0).
[[nodiscard]] double region_statistic(const EstimatorSet& est, const Matrix& h, const Vector& mu0);

/// True iff mu0 lies in the region {mu : region_statistic <= quantile}.
[[nodiscard]] bool confidence_region_test(const EstimatorSet& est, const Matrix& h, const Vector& mu0,
                                          double quantile);

[[nodiscard]] ConfidenceEllipsoid ellipsoid_from_quantile(const EstimatorSet& est, const Matrix& h,
                                                          double level, double quantile);

/// Uses the ceil(level * B)-th order statistic of an existing replicate set.
[[nodiscard]] ConfidenceEllipsoid ellipsoid(const EstimatorSet& est, const Matrix& h,
                                            const BootstrapResult& boot, double level);

/// Runs the MATS bootstrap for H0: H mu = 0 and builds the ellipsoid.
[[nodiscard]] ConfidenceEllipsoid ellipsoid(const GroupedSample& sample, const Matrix& h, double level,
                                            const BootstrapConfig& config);

/// `points` boundary points of a two-dimensional ellipsoid, angle 0..2pi.
[[nodiscard]] std::vector<Vector> ellipse_boundary(const ConfidenceEllipsoid& e, std::size_t points = 360);

/// Q_N^l = N (h^T xbar)^2 / (h^T D_N h) for one contrast.
[[nodiscard]] double contrast_statistic(const EstimatorSet& est, const Vector& h);

/// Simultaneous intervals h_l^T xbar +- sqrt(q * h_l^T D_N h_l / N) where q is
/// the bootstrap quantile of sum_l Q_N^l (kind = sum) or max_l Q_N^l.
[[nodiscard]] SimultaneousCIs simultaneous_cis(const GroupedSample& sample, const Matrix& contrasts,
                                               double level, const BootstrapConfig& config,
                                               Aggregate kind = Aggregate::sum);

}  // namespace mats
