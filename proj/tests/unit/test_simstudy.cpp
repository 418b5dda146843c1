#include "mats/error.hpp"
#include "mats/simstudy.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mats;

namespace {

double maxabs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

SimulationConfig small_config() {
    SimulationConfig c;
    c.d = 2;
    c.nsim = 60;
    c.nboot = 99;
    c.seed = 77;
    return c;
}

}  // namespace

TEST_CASE("covariance settings: closed forms") {
    Matrix s1 = covariance_setting(CovSetting::S1, 3, 0).matrix();
    CHECK(s1(0, 0) == 1.0);
    CHECK(s1(0, 2) == 0.5);
    Matrix s2 = covariance_setting(CovSetting::S2, 4, 1).matrix();
    CHECK(s2(0, 3) == Catch::Approx(0.216));
    CHECK(s2(1, 2) == Catch::Approx(0.6));
    Matrix s3 = covariance_setting(CovSetting::S3, 2, 1).matrix();
    CHECK(s3(0, 0) == 3.0);
    CHECK(s3(0, 1) == 0.5);
    Matrix s4 = covariance_setting(CovSetting::S4, 2, 1).matrix();
    CHECK(s4(0, 0) == 3.0);
    CHECK(s4(0, 1) == Catch::Approx(0.6));
    CHECK(maxabs(covariance_setting(CovSetting::S4, 2, 0).matrix() -
                 covariance_setting(CovSetting::S2, 2, 0).matrix()) == 0.0);
}

TEST_CASE("covariance settings: singular S5 block") {
    Matrix v1(4, 4);
    v1 << 1, 0.5, 1, 1,
          0.5, 1, 0.5, 0.5,
          1, 0.5, 1, 1,
          1, 0.5, 1, 1;
    const SymMatrix s5 = covariance_setting(CovSetting::S5, 4, 0);
    CHECK(maxabs(s5.matrix() - v1) == 0.0);
    CHECK(linalg::rank_sym(s5) == 2);
    CHECK(maxabs(covariance_setting(CovSetting::S5, 4, 1).matrix() - (v1.array() + 0.5).matrix()) == 0.0);
    const SymMatrix s8 = covariance_setting(CovSetting::S5, 8, 0);
    CHECK(linalg::rank_sym(s8) == 4);
    CHECK(maxabs(s8.matrix().block(4, 4, 4, 4) - v1) == 0.0);
    CHECK(maxabs(s8.matrix().block(0, 4, 4, 4)) == 0.0);
    CHECK_THROWS_AS(covariance_setting(CovSetting::S5, 6, 0), InputError);
}

TEST_CASE("covariance settings: S6 and S7 match the displayed 4x4 matrices") {
    Matrix v6(4, 4);
    v6 << 1, 0.6, 0.36, 0.18,
          0.6, 1, 0.6, 0.3,
          0.36, 0.6, 1, 0.5,
          0.18, 0.3, 0.5, 0.25;
    CHECK(maxabs(covariance_setting(CovSetting::S6, 4, 0).matrix() - v6) < 1e-15);
    Matrix v7(4, 4);
    v7 << 1, 0, 0, 0,
          0, std::numbers::sqrt2, 0, 0,
          0, 0, 2, 1,
          0, 0, 1, 0.5;
    CHECK(maxabs(covariance_setting(CovSetting::S7, 4, 0).matrix() - v7) < 1e-15);
    CHECK(maxabs(covariance_setting(CovSetting::S7, 4, 1).matrix() - (v7.array() + 0.5).matrix()) < 1e-15);
    // Last row is half the one before, so both are singular with rank d - 1.
    CHECK(linalg::rank_sym(covariance_setting(CovSetting::S6, 4, 0)) == 3);
    CHECK(linalg::rank_sym(covariance_setting(CovSetting::S7, 5, 0)) == 4);
    CHECK_THROWS_AS(covariance_setting(CovSetting::S6, 1, 0), InputError);
}

TEST_CASE("covariance settings: two-way cells scale with the cell index") {
    for (Index cell = 0; cell < 4; ++cell) {
        const double ell = static_cast<double>(cell + 1);
        const Matrix s10 = covariance_setting(CovSetting::S10, 3, cell).matrix();
        CHECK(s10(1, 1) == ell);
        CHECK(s10(0, 1) == 0.5);
        const Matrix s11 = covariance_setting(CovSetting::S11, 3, cell).matrix();
        CHECK(s11(2, 2) == 1.0 + ell);
        CHECK(s11(0, 1) == Catch::Approx(0.6));
        CHECK(maxabs(covariance_setting(CovSetting::S8, 3, cell).matrix() -
                     covariance_setting(CovSetting::S1, 3, 0).matrix()) == 0.0);
    }
    CHECK_THROWS_AS(covariance_setting(CovSetting::S10, 3, 4), InputError);
    CHECK_THROWS_AS(covariance_setting(CovSetting::S1, 3, 2), InputError);
}

TEST_CASE("error laws are standardized") {
    const double e = std::numbers::e;
    CHECK(std::exp(0.5) == Catch::Approx(std::sqrt(e)));
    CHECK((e - 1.0) * e == Catch::Approx(std::exp(2.0) - std::exp(1.0)));
    for (ErrorLaw law : {ErrorLaw::normal, ErrorLaw::chi2_3, ErrorLaw::lognormal, ErrorLaw::t3,
                         ErrorLaw::double_exponential}) {
        const ErrorSampler sampler(law);
        Philox rng(99, static_cast<std::uint64_t>(law));
        const int n = 1000000;
        double sum = 0.0;
        double sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = sampler(rng);
            sum += x;
            sq += x * x;
        }
        const double mean = sum / n;
        INFO(to_string(law));
        CHECK(std::abs(mean) < 0.005);
        // t3 has no fourth moment, so its variance estimate converges slowly.
        CHECK(std::abs(sq / n - mean * mean - 1.0) < (law == ErrorLaw::t3 ? 0.05 : 0.01));
    }
}

TEST_CASE("generated data follows the configured covariance") {
    SimulationConfig c;
    c.d = 4;
    c.cov_setting = CovSetting::S5;
    c.sample_sizes = {10000, 10000};
    c.seed = 1;
    const GroupedSample s = generate_dataset(c, 0);
    Matrix x = s.group(0);
    x.rowwise() -= x.colwise().mean();
    const Matrix v = x.transpose() * x / static_cast<double>(x.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> es(v);
    // Rank 2: two eigenvalues at rounding level.
    CHECK(es.eigenvalues()(0) < 1e-10);
    CHECK(es.eigenvalues()(1) < 1e-10);
    CHECK(es.eigenvalues()(2) > 0.1);
    CHECK(maxabs(v - covariance_setting(CovSetting::S5, 4, 0).matrix()) < 0.1);

    c.cov_setting = CovSetting::S1;
    c.d = 2;
    c.shift = 1.5;
    const GroupedSample t = generate_dataset(c, 3);
    CHECK(std::abs(t.group(0).colwise().mean()(0)) < 0.05);
    CHECK(std::abs(t.group(1).colwise().mean()(1) - 1.5) < 0.05);
}

TEST_CASE("generate_dataset is deterministic in seed and replicate") {
    SimulationConfig c = small_config();
    const GroupedSample a = generate_dataset(c, 5);
    const GroupedSample b = generate_dataset(c, 5);
    const GroupedSample other = generate_dataset(c, 6);
    CHECK(maxabs(a.group(1) - b.group(1)) == 0.0);
    CHECK(maxabs(a.group(1) - other.group(1)) > 0.0);
    c.layout = Layout::two_way_2x2;
    c.cov_setting = CovSetting::S10;
    c.sample_sizes = {5, 6, 7, 8};
    c.hypothesis = StudyHypothesis::interaction;
    const GroupedSample w = generate_dataset(c, 0);
    CHECK(w.groups() == 4);
    CHECK(w.sizes() == std::vector<Index>{5, 6, 7, 8});
}

TEST_CASE("SimulationConfig validation") {
    const auto bad = [](auto mutate) {
        SimulationConfig c = small_config();
        mutate(c);
        return c;
    };
    CHECK_NOTHROW(small_config().validate());
    CHECK_THROWS_AS(bad([](SimulationConfig& c) { c.cov_setting = CovSetting::S9; }).validate(), InputError);
    CHECK_THROWS_AS(bad([](SimulationConfig& c) { c.sample_sizes = {10, 10, 10}; }).validate(), InputError);
    CHECK_THROWS_AS(bad([](SimulationConfig& c) { c.sample_sizes = {1, 10}; }).validate(), InputError);
    CHECK_THROWS_AS(bad([](SimulationConfig& c) { c.hypothesis = StudyHypothesis::factor_a; }).validate(), InputError);
    CHECK_THROWS_AS(bad([](SimulationConfig& c) { c.nsim = 0; }).validate(), InputError);
    CHECK_THROWS_AS(bad([](SimulationConfig& c) { c.methods.clear(); }).validate(), InputError);
    CHECK_THROWS_AS(bad([](SimulationConfig& c) { c.alpha = 1.0; }).validate(), InputError);
    CHECK_THROWS_AS(bad([](SimulationConfig& c) { c.shift = -1.0; }).validate(), InputError);
    CHECK_THROWS_AS(bad([](SimulationConfig& c) { c.group_order = {0, 0}; }).validate(), InputError);
    CHECK_THROWS_AS(bad([](SimulationConfig& c) {
                        c.cov_setting = CovSetting::S5;
                        c.d = 6;
                    }).validate(),
                    InputError);
    CHECK_THROWS_AS(bad([](SimulationConfig& c) {
                        c.layout = Layout::two_way_2x2;
                        c.cov_setting = CovSetting::S8;
                        c.sample_sizes = {5, 5, 5, 5};
                    }).validate(),
                    InputError);
    CHECK_THROWS_AS(run_study(bad([](SimulationConfig& c) { c.nboot = 0; })), InputError);
}

TEST_CASE("enum names round trip") {
    for (Method m : all_methods()) {
        CHECK(parse_method(to_string(m)) == m);
    }
    CHECK(parse_cov_setting("S11") == CovSetting::S11);
    CHECK(parse_error_law(to_string(ErrorLaw::double_exponential)) == ErrorLaw::double_exponential);
    CHECK(parse_study_hypothesis("factorB") == StudyHypothesis::factor_b);
    CHECK(parse_layout(to_string(Layout::two_way_2x2)) == Layout::two_way_2x2);
    CHECK_THROWS_AS(parse_method("mats"), InputError);
    CHECK_THROWS_AS(parse_cov_setting("S12"), InputError);
}

TEST_CASE("Monte Carlo standard error") {
    CHECK(monte_carlo_se(0.05, 2000) == Catch::Approx(std::sqrt(0.05 * 0.95 / 2000)));
    CHECK(monte_carlo_se(0.3, 1000) / monte_carlo_se(0.3, 2000) == Catch::Approx(std::sqrt(2.0)));
    CHECK(monte_carlo_se(0.0, 10) == 0.0);
}

TEST_CASE("run_study does not depend on the worker count") {
    SimulationConfig c = small_config();
    c.shift = 0.4;
    const StudyReport one = run_study(c);
    c.workers = 3;
    const StudyReport three = run_study(c);
    REQUIRE(one.results.size() == all_methods().size());
    for (std::size_t m = 0; m < one.results.size(); ++m) {
        CHECK(one.results[m].method == three.results[m].method);
        CHECK(one.results[m].rejections == three.results[m].rejections);
        CHECK(one.results[m].rejection_rate ==
              static_cast<double>(one.results[m].rejections) / static_cast<double>(c.nsim));
    }
}

TEST_CASE("relabelling exchangeable groups leaves rejection counts unchanged") {
    SimulationConfig c = small_config();
    c.nsim = 100;
    const StudyReport base = run_study(c);
    c.group_order = {1, 0};
    const StudyReport swapped = run_study(c);
    for (Method m : all_methods()) {
        INFO(to_string(m));
        CHECK(base.at(m).rejections == swapped.at(m).rejections);
    }
}

TEST_CASE("power grows with the shift") {
    SimulationConfig c = small_config();
    c.methods = {Method::mats_pbs, Method::wts_chi2};
    c.nsim = 200;
    const std::vector<StudyReport> reports = run_power_study(c, {0.0, 0.5, 1.0, 2.0});
    REQUIRE(reports.size() == 4);
    for (std::size_t k = 1; k < reports.size(); ++k) {
        CHECK(reports[k].config.shift > reports[k - 1].config.shift);
        CHECK(reports[k].at(Method::mats_pbs).rejections >= reports[k - 1].at(Method::mats_pbs).rejections);
    }
    CHECK(reports.back().at(Method::mats_pbs).rejection_rate > 0.9);
    CHECK_THROWS_AS(reports[0].at(Method::mats_npbs), InputError);
}

TEST_CASE("study configuration from JSON") {
    const SimulationConfig c = config_from_json(
        R"({"layout": "two_way_2x2", "d": 3, "cov_setting": "S11", "error_law": "t3",
            "sample_sizes": [5, 6, 7, 8], "hypothesis": "interaction", "nsim": 10, "nboot": 20,
            "methods": ["mats_pbs", "wts_chi2"], "alpha": 0.1, "seed": 9, "deltas": [0, 1]})");
    CHECK(c.layout == Layout::two_way_2x2);
    CHECK(c.d == 3);
    CHECK(c.cov_setting == CovSetting::S11);
    CHECK(c.error_law == ErrorLaw::t3);
    CHECK(c.sample_sizes == std::vector<Index>{5, 6, 7, 8});
    CHECK(c.methods == std::vector<Method>{Method::mats_pbs, Method::wts_chi2});
    CHECK(c.alpha == 0.1);
    CHECK(c.seed == 9);
    CHECK_THROWS_AS(config_from_json(R"({"d": 3})"), InputError);
    CHECK_THROWS_AS(config_from_json(R"({"seed": 1, "colour": "red"})"), InputError);
    CHECK_THROWS_AS(config_from_json("not json"), InputError);
}

TEST_CASE("study reports serialise to CSV and JSON") {
    SimulationConfig c = small_config();
    c.nsim = 10;
    c.methods = {Method::wts_chi2, Method::mats_wild};
    const StudyReport r = run_study(c);
    std::ostringstream csv;
    write_csv_header(csv);
    write_csv_rows(csv, r);
    const std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(text.find("mats_wild") != std::string::npos);
    CHECK(text.find("10;10") != std::string::npos);
    const std::string json = to_json(r);
    CHECK(json.find("\"rejection_rate\"") != std::string::npos);
    CHECK(json.find("\"wts_chi2\"") != std::string::npos);
}
