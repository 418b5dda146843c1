#include "mats/stats.hpp"

#include "mats/error.hpp"
#include "mats/rng.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mats {

namespace {

constexpr double kWeightClamp = 1e-10;

void check_dims(const EstimatorSet& est, const HypothesisSpec& hyp) {
    if (hyp.dim() != est.a * est.d) {
        std::ostringstream os;
        os << "hypothesis acts on dimension " << hyp.dim() << " but the data have a*d = " << est.a * est.d;
        throw DimensionError(os.str());
    }
}

}  // namespace

HypothesisSpec HypothesisSpec::from_contrast(Matrix h, std::string label) {
    HypothesisSpec spec;
    spec.T = linalg::projection_from_contrast(h);
    spec.H = std::move(h);
    spec.label = std::move(label);
    spec.rank = static_cast<Index>(std::llround(spec.T.matrix().trace()));
    return spec;
}

HypothesisSpec one_way_hypothesis(Index a, Index d) {
    if (a < 2 || d < 1) {
        throw InputError("one-way hypothesis needs a >= 2 groups and d >= 1");
    }
    return HypothesisSpec::from_contrast(linalg::kron(linalg::centering(a), linalg::identity(d)), "group");
}

HypothesisSpec two_way_hypothesis(Index a, Index b, Index d, TwoWayEffect effect) {
    if (a < 2 || b < 2 || d < 1) {
        throw InputError("two-way hypothesis needs a, b >= 2 and d >= 1");
    }
    using linalg::centering;
    using linalg::identity;
    using linalg::kron;
    using linalg::ones;
    switch (effect) {
    case TwoWayEffect::factor_a:
        return HypothesisSpec::from_contrast(
            kron(kron(centering(a), ones(b) / static_cast<double>(b)), identity(d)), "factorA");
    case TwoWayEffect::factor_b:
        return HypothesisSpec::from_contrast(
            kron(kron(ones(a) / static_cast<double>(a), centering(b)), identity(d)), "factorB");
    case TwoWayEffect::interaction:
        return HypothesisSpec::from_contrast(kron(kron(centering(a), centering(b)), identity(d)),
                                             "interaction");
    }
    throw InputError("unknown two-way effect");
}

namespace detail {

double diag_quadratic(const Vector& v, const Vector& weights, const SymMatrix& t, Index total) {
    const Matrix& tm = t.matrix();
    const SymMatrix middle = SymMatrix::symmetrized(tm * weights.asDiagonal() * tm);
    const SymMatrix inv = linalg::pinv_sym(middle);
    const Vector tv = tm * v;
    const double q = static_cast<double>(total) * tv.dot(inv.matrix() * tv);
    return std::max(0.0, q);
}

double dense_quadratic(const Vector& v, const SymMatrix& s, const SymMatrix& t, Index total) {
    const Matrix& tm = t.matrix();
    const SymMatrix middle = SymMatrix::symmetrized(tm * s.matrix() * tm);
    const SymMatrix inv = linalg::pinv_sym(middle);
    const Vector tv = tm * v;
    const double q = static_cast<double>(total) * tv.dot(inv.matrix() * tv);
    return std::max(0.0, q);
}

}  // namespace detail

double mats_statistic(const EstimatorSet& est, const HypothesisSpec& hyp) {
    check_dims(est, hyp);
    return detail::diag_quadratic(est.mean_vector, est.d_hat_diag, hyp.T, est.N);
}

double wts_statistic(const EstimatorSet& est, const HypothesisSpec& hyp) {
    check_dims(est, hyp);
    return detail::dense_quadratic(est.mean_vector, est.sigma_hat, hyp.T, est.N);
}

double chi2_upper_tail(double x, double df) {
    if (!(df > 0.0)) {
        throw ContractError("chi-square degrees of freedom must be positive");
    }
    if (x <= 0.0) {
        return 1.0;
    }
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double chi2_quantile(double p, double df) {
    if (!(df > 0.0) || !(p >= 0.0 && p < 1.0)) {
        throw ContractError("chi-square quantile needs df > 0 and p in [0, 1)");
    }
    return 2.0 * boost::math::gamma_p_inv(0.5 * df, p);
}

double wts_chi2_pvalue(double t, const HypothesisSpec& hyp) {
    if (t < 0.0) {
        throw ContractError("test statistic must be non-negative");
    }
    if (hyp.rank == 0) {
        return 1.0;
    }
    return chi2_upper_tail(t, static_cast<double>(hyp.rank));
}

AtsResult ats_f(const EstimatorSet& est, const HypothesisSpec& hyp) {
    check_dims(est, hyp);
    const Matrix& tm = hyp.T.matrix();
    const Matrix ts = tm * est.sigma_hat.matrix();
    const double tr = ts.trace();
    if (!(tr > 0.0)) {
        throw ContractError("ANOVA-type statistic needs tr(T Sigma) > 0");
    }
    const double tr_sq = (ts * ts).trace();

    AtsResult out;
    out.statistic = static_cast<double>(est.N) / tr * est.mean_vector.dot(tm * est.mean_vector);
    out.statistic = std::max(0.0, out.statistic);
    out.df = tr * tr / tr_sq;
    out.p_value = chi2_upper_tail(out.df * out.statistic, out.df);
    return out;
}

double ats_critical_value(double df, double alpha) {
    return chi2_quantile(1.0 - alpha, df) / df;
}

LimitSpec limit_weights(const EstimatorSet& est, const HypothesisSpec& hyp) {
    check_dims(est, hyp);
    const Matrix& tm = hyp.T.matrix();
    const SymMatrix middle = SymMatrix::symmetrized(tm * est.d_hat_diag.asDiagonal() * tm);
    const Matrix kernel = tm * linalg::pinv_sym(middle).matrix() * tm;

    // eig(K Sigma) = eig(Sigma^1/2 K Sigma^1/2) for PSD Sigma, which keeps
    // the computation inside the symmetric eigensolver.
    const SymMatrix root = linalg::psd_sqrt(est.sigma_hat);
    const SymMatrix sandwich = SymMatrix::symmetrized(root.matrix() * kernel * root.matrix());
    Vector w = linalg::eigen_sym(sandwich).eigenvalues;
    const double top = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
    for (Index i = 0; i < w.size(); ++i) {
        if (w(i) < 0.0) {
            if (w(i) < -kWeightClamp * std::max(1.0, top)) {
                std::ostringstream os;
                os << "limit weight " << w(i) << " is negative beyond rounding";
                throw NotPsdError(os.str());
            }
            w(i) = 0.0;
        }
    }

    LimitSpec spec;
    spec.weights = std::move(w);
    spec.kappa.resize(est.a);
    for (Index i = 0; i < est.a; ++i) {
        spec.kappa(i) = static_cast<double>(est.n[static_cast<std::size_t>(i)]) / static_cast<double>(est.N);
    }
    return spec;
}

std::vector<double> sample_limit(const LimitSpec& spec, std::size_t draws, std::uint64_t seed) {
    if (draws == 0) {
        throw ContractError("sample_limit needs at least one draw");
    }
    std::vector<double> active;
    for (Index i = 0; i < spec.weights.size(); ++i) {
        if (spec.weights(i) > 0.0) {
            active.push_back(spec.weights(i));
        }
    }
    std::vector<double> out(draws, 0.0);
    if (active.empty()) {
        return out;
    }
    Philox rng(seed, derive_stream({0x11A17ull}));
    std::normal_distribution<double> normal;
    for (double& z : out) {
        double sum = 0.0;
        for (double w : active) {
            const double g = normal(rng);
            sum += w * g * g;
        }
        z = sum;
    }
    return out;
}

}  // namespace mats
