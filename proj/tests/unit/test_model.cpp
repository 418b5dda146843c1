#include "mats/error.hpp"
#include "mats/model.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <limits>
#include <numeric>

using namespace mats;

namespace {

double maxabs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("GroupedSample validates its blocks") {
    Matrix two(2, 2);
    two << 0, 0, 2, 2;
    Matrix one(1, 2);
    one << 1, 1;
    Matrix wide(2, 3);
    wide.setOnes();
    CHECK_THROWS_AS(GroupedSample(std::vector<Matrix>{}), InputError);
    CHECK_THROWS_AS(GroupedSample({two, one}), InputError);
    CHECK_THROWS_AS(GroupedSample({two, wide}), DimensionError);
    Matrix bad = two;
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(GroupedSample({bad}), InputError);
    CHECK_THROWS_AS(GroupedSample({two, two}, {"only one"}), InputError);

    const GroupedSample s({two, two, two}, {"x", "y", "z"});
    CHECK(s.groups() == 3);
    CHECK(s.dim() == 2);
    CHECK(s.total() == 6);
    CHECK(s.sizes() == std::vector<Index>{2, 2, 2});
    CHECK(s.labels()[1] == "y");
}

TEST_CASE("estimate: two-row hand example") {
    Matrix x(2, 2);
    x << 0, 0, 2, 2;
    const EstimatorSet est = estimate(GroupedSample({x}));
    CHECK(est.mean_vector(0) == 1.0);
    CHECK(est.mean_vector(1) == 1.0);
    Matrix v(2, 2);
    v << 2, 2, 2, 2;
    CHECK(maxabs(est.group_covs[0].matrix() - v) == 0.0);
}

TEST_CASE("estimate: zero-variance component") {
    Matrix x(2, 2);
    x << 1, 5, 1, 6;
    Matrix y(2, 2);
    y << 0, 1, 2, 3;
    const GroupedSample s({x, y});
    CHECK_THROWS_AS(estimate(s), DegenerateVarianceError);
    const EstimatorSet est = estimate(s, VariancePolicy::allow_zero);
    CHECK(est.zero_variance_components == 1);
    CHECK(est.d_hat_diag(0) == 0.0);
    CHECK(est.d_hat_diag(1) > 0.0);
}

TEST_CASE("estimate: D_N block scales are N / n_i") {
    oracle::Gen gen(3);
    Matrix a = gen.normal_matrix(10, 3);
    Matrix b = gen.normal_matrix(20, 3);
    const EstimatorSet est = estimate(GroupedSample({a, b}));
    CHECK(est.N == 30);
    for (Index s = 0; s < 3; ++s) {
        CHECK(est.d_hat_diag(s) == Catch::Approx(3.0 * est.group_covs[0](s, s)).epsilon(1e-14));
        CHECK(est.d_hat_diag(3 + s) == Catch::Approx(1.5 * est.group_covs[1](s, s)).epsilon(1e-14));
    }
    const Matrix dh = est.d_hat().matrix();
    CHECK(maxabs(dh - Matrix(est.sigma_hat.matrix().diagonal().asDiagonal())) == 0.0);
}

TEST_CASE("estimate agrees with loop-based moments on random samples") {
    oracle::Gen gen(17);
    for (int rep = 0; rep < 100; ++rep) {
        const Index a = gen.integer(1, 5);
        const Index d = gen.integer(1, 6);
        const GroupedSample s = gen.sample(a, d, 2, 15);
        const EstimatorSet est = estimate(s);
        const oracle::Moments m = oracle::moments(s);
        for (Index i = 0; i < a * d; ++i) {
            CHECK(est.mean_vector(i) == Catch::Approx(m.means[static_cast<std::size_t>(i)]).margin(1e-12));
        }
        CHECK(maxabs(est.sigma_hat.matrix() - oracle::sigma_hat(s)) <= 1e-10 * std::max(1.0, maxabs(est.sigma_hat.matrix())));
        for (Index g = 0; g < a; ++g) {
            const Matrix& v = est.group_covs[static_cast<std::size_t>(g)].matrix();
            Eigen::SelfAdjointEigenSolver<Matrix> es(v);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, maxabs(v)));
            for (Index c = 0; c < d; ++c) {
                CHECK(v(c, c) == Catch::Approx(m.variances[static_cast<std::size_t>(g)][static_cast<std::size_t>(c)])
                                     .epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("estimate is invariant to row order within groups") {
    oracle::Gen gen(23);
    for (int rep = 0; rep < 50; ++rep) {
        const GroupedSample s = gen.sample(3, 4, 2, 12);
        std::vector<Matrix> shuffled;
        for (Index g = 0; g < s.groups(); ++g) {
            const Matrix& x = s.group(g);
            std::vector<Index> perm(static_cast<std::size_t>(x.rows()));
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), gen.engine());
            Matrix y(x.rows(), x.cols());
            for (Index k = 0; k < x.rows(); ++k) {
                y.row(k) = x.row(perm[static_cast<std::size_t>(k)]);
            }
            shuffled.push_back(y);
        }
        const EstimatorSet e1 = estimate(s);
        const EstimatorSet e2 = estimate(GroupedSample(shuffled));
        CHECK(maxabs(e1.mean_vector - e2.mean_vector) <= 1e-12);
        CHECK(maxabs(e1.sigma_hat.matrix() - e2.sigma_hat.matrix()) <= 1e-12 * std::max(1.0, maxabs(e1.sigma_hat.matrix())));
    }
}
