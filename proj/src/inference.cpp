#include "mats/inference.hpp"

#include "mats/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mats {

namespace {

void check_h(const EstimatorSet& est, const Matrix& h) {
    if (h.cols() != est.a * est.d || h.rows() == 0) {
        std::ostringstream os;
        os << "contrast matrix has " << h.cols() << " columns, expected a*d = " << est.a * est.d;
        throw DimensionError(os.str());
    }
}

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw ContractError("confidence level must lie in (0, 1)");
    }
}

// 1/x with (0)^+ = 0.
double pinv_scalar(double x) { return x > 0.0 ? 1.0 / x : 0.0; }

}  // namespace

double region_statistic(const EstimatorSet& est, const Matrix& h, const Vector& mu0) {
    check_h(est, h);
    if (mu0.size() != h.cols()) {
        throw DimensionError("mu0 must have length a*d");
    }
    const Vector diff = h * (est.mean_vector - mu0);
    const SymMatrix hdh = SymMatrix::symmetrized(h * est.d_hat_diag.asDiagonal() * h.transpose());
    const SymMatrix inv = linalg::pinv_sym(hdh);
    return std::max(0.0, static_cast<double>(est.N) * diff.dot(inv.matrix() * diff));
}

bool confidence_region_test(const EstimatorSet& est, const Matrix& h, const Vector& mu0, double quantile) {
    return region_statistic(est, h, mu0) <= quantile;
}

ConfidenceEllipsoid ellipsoid_from_quantile(const EstimatorSet& est, const Matrix& h, double level,
                                            double quantile) {
    check_h(est, h);
    check_level(level);
    if (quantile < 0.0) {
        throw ContractError("quantile must be non-negative");
    }
    const SymMatrix hdh = SymMatrix::symmetrized(h * est.d_hat_diag.asDiagonal() * h.transpose());
    const linalg::SpectralDecomp sd = linalg::eigen_sym(hdh);

    ConfidenceEllipsoid e;
    e.center = h * est.mean_vector;
    e.eigenvalues = sd.eigenvalues.cwiseMax(0.0);
    e.axes = sd.eigenvectors;
    e.level = level;
    e.quantile = quantile;
    e.N = est.N;
    e.axis_lengths = (e.eigenvalues * (quantile / static_cast<double>(est.N))).cwiseSqrt();
    return e;
}

ConfidenceEllipsoid ellipsoid(const EstimatorSet& est, const Matrix& h, const BootstrapResult& boot,
                              double level) {
    check_level(level);
    return ellipsoid_from_quantile(est, h, level, empirical_quantile(boot.replicates, level));
}

ConfidenceEllipsoid ellipsoid(const GroupedSample& sample, const Matrix& h, double level,
                              const BootstrapConfig& config) {
    const HypothesisSpec hyp = HypothesisSpec::from_contrast(h, "ellipsoid");
    const BootstrapResult boot = bootstrap_test(sample, hyp, config, TestStatistic::mats);
    return ellipsoid(estimate(sample), h, boot, level);
}

std::vector<Vector> ellipse_boundary(const ConfidenceEllipsoid& e, std::size_t points) {
    if (e.center.size() != 2) {
        throw DimensionError("boundary polyline is only defined for two contrasts");
    }
    std::vector<Vector> out;
    out.reserve(points);
    for (std::size_t k = 0; k < points; ++k) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(points);
        out.push_back(e.center + e.axis_lengths(0) * std::cos(t) * e.axes.col(0) +
                      e.axis_lengths(1) * std::sin(t) * e.axes.col(1));
    }
    return out;
}

double contrast_statistic(const EstimatorSet& est, const Vector& h) {
    if (h.size() != est.a * est.d) {
        throw DimensionError("contrast vector must have length a*d");
    }
    const double num = h.dot(est.mean_vector);
    const double den = h.cwiseProduct(h).dot(est.d_hat_diag);
    return static_cast<double>(est.N) * num * num * pinv_scalar(den);
}

SimultaneousCIs simultaneous_cis(const GroupedSample& sample, const Matrix& contrasts, double level,
                                 const BootstrapConfig& config, Aggregate kind) {
    check_level(level);
    const EstimatorSet est = estimate(sample);
    check_h(est, contrasts);
    const double scale = std::max(1.0, linalg::max_abs(contrasts));
    for (Index l = 0; l < contrasts.rows(); ++l) {
        if (contrasts.row(l).cwiseAbs().maxCoeff() == 0.0) {
            std::ostringstream os;
            os << "contrast " << l << " is the zero vector";
            throw ContractError(os.str());
        }
        if (std::abs(contrasts.row(l).sum()) > 1e-10 * scale * static_cast<double>(contrasts.cols())) {
            std::ostringstream os;
            os << "row " << l << " is not a contrast (entries must sum to zero)";
            throw ContractError(os.str());
        }
    }

    const Matrix squared = contrasts.cwiseProduct(contrasts);
    auto aggregate = [&contrasts, &squared, kind](const EstimatorSet& boot) {
        const Vector num = contrasts * boot.mean_vector;
        const Vector den = squared * boot.d_hat_diag;
        double acc = 0.0;
        for (Index l = 0; l < num.size(); ++l) {
            const double q = static_cast<double>(boot.N) * num(l) * num(l) * pinv_scalar(den(l));
            acc = kind == Aggregate::sum ? acc + q : std::max(acc, q);
        }
        return acc;
    };
    const ReplicateSet reps = bootstrap_distribution(sample, est, config, aggregate);

    SimultaneousCIs out;
    out.contrasts = contrasts;
    out.level = level;
    out.kind = kind;
    out.quantile = empirical_quantile(reps.values, level);
    out.n_degenerate_replicates = reps.degenerate;
    out.estimates = contrasts * est.mean_vector;
    const Vector variances = squared * est.d_hat_diag;
    out.half_widths = (variances * (out.quantile / static_cast<double>(est.N))).cwiseSqrt();
    out.lower = out.estimates - out.half_widths;
    out.upper = out.estimates + out.half_widths;
    return out;
}

}  // namespace mats
