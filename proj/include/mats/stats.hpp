#pragma once

#include "mats/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mats {

/// Null hypothesis H mu = 0 together with its projection T = H^T (H H^T)^+ H.
struct HypothesisSpec {
    Matrix H;
    SymMatrix T;
    std::string label;
    Index rank = 0;  // rank(T) = trace(T)

    /// Validates the contrast property and derives T.
    static HypothesisSpec from_contrast(Matrix h, std::string label = {});

    [[nodiscard]] Index dim() const noexcept { return T.dim(); }
};

/// No group effect in a one-way layout: H = P_a (x) I_d.
[[nodiscard]] HypothesisSpec one_way_hypothesis(Index a, Index d);

enum class TwoWayEffect { factor_a, factor_b, interaction };

/// a x b crossed design with cells ordered row-major, (1,1), (1,2), ..., (a,b).
///   factor A:    P_a (x) J_b / b (x) I_d
///   factor B:    J_a / a (x) P_b (x) I_d
///   interaction: P_a (x) P_b (x) I_d
[[nodiscard]] HypothesisSpec two_way_hypothesis(Index a, Index b, Index d, TwoWayEffect effect);

/// Modified ANOVA-type statistic Q_N = N xbar^T T (T D_N T)^+ T xbar.
[[nodiscard]] double mats_statistic(const EstimatorSet& est, const HypothesisSpec& hyp);

/// Wald-type statistic T_N = N xbar^T T (T Sigma_N T)^+ T xbar.
[[nodiscard]] double wts_statistic(const EstimatorSet& est, const HypothesisSpec& hyp);

/// Upper tail of chi^2 with rank(T) degrees of freedom at t.
[[nodiscard]] double wts_chi2_pvalue(double t, const HypothesisSpec& hyp);

struct AtsResult {
    double statistic = 0.0;  // F_N
    double df = 0.0;         // nu-hat
    double p_value = 1.0;    // upper tail of F(nu, inf)
};

/// ANOVA-type statistic with the F(nu, inf) approximation:
///   F_N = N / tr(T Sigma) * xbar^T T xbar,  nu = tr^2(T Sigma) / tr((T Sigma)^2).
/// Not invariant under rescaling of single components.
[[nodiscard]] AtsResult ats_f(const EstimatorSet& est, const HypothesisSpec& hyp);

/// (1 - alpha) quantile of F(df, inf), i.e. chi^2_df quantile / df.
[[nodiscard]] double ats_critical_value(double df, double alpha);

/// Weights of the weighted chi^2_1 limit of Q_N under H0, with plug-in
/// estimates for D, Sigma and kappa.
struct LimitSpec {
    Vector weights;  // eigenvalues of T (T D T)^+ T Sigma, descending, >= 0
    Vector kappa;    // n_i / N
};

[[nodiscard]] LimitSpec limit_weights(const EstimatorSet& est, const HypothesisSpec& hyp);

/// Draws of sum_j weight_j * Z_j^2 with Z_j iid standard normal.
[[nodiscard]] std::vector<double> sample_limit(const LimitSpec& spec, std::size_t draws, std::uint64_t seed);

/// Upper tail probability of chi^2_df at x (df real, > 0).
[[nodiscard]] double chi2_upper_tail(double x, double df);

/// p-quantile of chi^2_df.
[[nodiscard]] double chi2_quantile(double p, double df);

namespace detail {

/// N v^T T (T W T)^+ T v for a diagonal weight W given as a vector.
[[nodiscard]] double diag_quadratic(const Vector& v, const Vector& weights, const SymMatrix& t, Index total);

/// N v^T T (T S T)^+ T v for a dense S.
[[nodiscard]] double dense_quadratic(const Vector& v, const SymMatrix& s, const SymMatrix& t, Index total);

}  // namespace detail

}  // namespace mats
