#include "mats/simstudy.hpp"

#include "mats/error.hpp"
#include "mats/parallel.hpp"
#include "mats/resample.hpp"
#include "mats/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace mats {

namespace {

constexpr std::uint64_t kDataTag = 0xDA7A;
constexpr std::uint64_t kBootTag = 0xB007;

template <class E, std::size_t K>
E parse_enum(std::string_view s, const E (&values)[K], std::string_view what) {
    for (E v : values) {
        if (to_string(v) == s) {
            return v;
        }
    }
    std::ostringstream os;
    os << "unknown " << what << " '" << s << "'";
    throw InputError(os.str());
}

constexpr Layout kLayouts[] = {Layout::one_way, Layout::two_way_2x2};
constexpr CovSetting kSettings[] = {CovSetting::S1, CovSetting::S2, CovSetting::S3, CovSetting::S4,
                                    CovSetting::S5, CovSetting::S6, CovSetting::S7, CovSetting::S8,
                                    CovSetting::S9, CovSetting::S10, CovSetting::S11};
constexpr ErrorLaw kLaws[] = {ErrorLaw::normal, ErrorLaw::chi2_3, ErrorLaw::lognormal, ErrorLaw::t3,
                              ErrorLaw::double_exponential};
constexpr StudyHypothesis kHypotheses[] = {StudyHypothesis::group, StudyHypothesis::factor_a,
                                           StudyHypothesis::factor_b, StudyHypothesis::interaction};
constexpr Method kMethods[] = {Method::wts_chi2, Method::wts_pbs, Method::mats_wild, Method::mats_pbs,
                               Method::mats_npbs};

int setting_number(CovSetting id) { return static_cast<int>(id) + 1; }

Matrix compound_symmetry(Index d, double diag) {
    return diag * linalg::identity(d) + 0.5 * (linalg::ones(d) - linalg::identity(d));
}

Matrix autoregressive(Index d, double rho) {
    Matrix m(d, d);
    for (Index r = 0; r < d; ++r) {
        for (Index s = 0; s < d; ++s) {
            m(r, s) = std::pow(rho, static_cast<double>(std::abs(r - s)));
        }
    }
    return m;
}

// Column d <- half of column d-1, then row d <- half of row d-1.
Matrix halve_last(Matrix m) {
    const Index d = m.rows();
    m.col(d - 1) = 0.5 * m.col(d - 2);
    m.row(d - 1) = 0.5 * m.row(d - 2);
    return m;
}

Matrix s5_block() {
    Matrix m(4, 4);
    m << 1.0, 0.5, 1.0, 1.0,
         0.5, 1.0, 0.5, 0.5,
         1.0, 0.5, 1.0, 1.0,
         1.0, 0.5, 1.0, 1.0;
    return m;
}

Matrix jd(Index d) { return linalg::ones(d); }

Index group_count(const SimulationConfig& c) { return c.layout == Layout::one_way ? 2 : 4; }

HypothesisSpec study_hypothesis(const SimulationConfig& c) {
    switch (c.hypothesis) {
    case StudyHypothesis::group: return one_way_hypothesis(2, c.d);
    case StudyHypothesis::factor_a: return two_way_hypothesis(2, 2, c.d, TwoWayEffect::factor_a);
    case StudyHypothesis::factor_b: return two_way_hypothesis(2, 2, c.d, TwoWayEffect::factor_b);
    case StudyHypothesis::interaction: return two_way_hypothesis(2, 2, c.d, TwoWayEffect::interaction);
    }
    throw InputError("unknown hypothesis");
}

}  // namespace

std::string_view to_string(Layout v) noexcept {
    switch (v) {
    case Layout::one_way: return "one_way";
    case Layout::two_way_2x2: return "two_way_2x2";
    }
    return "?";
}

std::string_view to_string(CovSetting v) noexcept {
    static constexpr std::string_view names[] = {"S1", "S2", "S3", "S4", "S5", "S6",
                                                  "S7", "S8", "S9", "S10", "S11"};
    return names[static_cast<int>(v)];
}

std::string_view to_string(ErrorLaw v) noexcept {
    switch (v) {
    case ErrorLaw::normal: return "normal";
    case ErrorLaw::chi2_3: return "chi2_3";
    case ErrorLaw::lognormal: return "lognormal";
    case ErrorLaw::t3: return "t3";
    case ErrorLaw::double_exponential: return "double_exponential";
    }
    return "?";
}

std::string_view to_string(StudyHypothesis v) noexcept {
    switch (v) {
    case StudyHypothesis::group: return "group";
    case StudyHypothesis::factor_a: return "factorA";
    case StudyHypothesis::factor_b: return "factorB";
    case StudyHypothesis::interaction: return "interaction";
    }
    return "?";
}

std::string_view to_string(Method v) noexcept {
    switch (v) {
    case Method::wts_chi2: return "wts_chi2";
    case Method::wts_pbs: return "wts_pbs";
    case Method::mats_wild: return "mats_wild";
    case Method::mats_pbs: return "mats_pbs";
    case Method::mats_npbs: return "mats_npbs";
    }
    return "?";
}

Layout parse_layout(std::string_view s) { return parse_enum(s, kLayouts, "layout"); }
CovSetting parse_cov_setting(std::string_view s) { return parse_enum(s, kSettings, "covariance setting"); }
ErrorLaw parse_error_law(std::string_view s) { return parse_enum(s, kLaws, "error law"); }
StudyHypothesis parse_study_hypothesis(std::string_view s) { return parse_enum(s, kHypotheses, "hypothesis"); }
Method parse_method(std::string_view s) { return parse_enum(s, kMethods, "method"); }

const std::vector<Method>& all_methods() {
    static const std::vector<Method> all(std::begin(kMethods), std::end(kMethods));
    return all;
}

void SimulationConfig::validate() const {
    const int id = setting_number(cov_setting);
    if (d < 1) {
        throw InputError("d must be positive");
    }
    if (layout == Layout::one_way) {
        if (id > 7) {
            throw InputError("one-way layout supports covariance settings S1-S7");
        }
        if (sample_sizes.size() != 2) {
            throw InputError("one-way layout needs 2 sample sizes");
        }
        if (hypothesis != StudyHypothesis::group) {
            throw InputError("one-way layout only tests the group hypothesis");
        }
    } else {
        if (id < 8) {
            throw InputError("two-way layout supports covariance settings S8-S11");
        }
        if (sample_sizes.size() != 4) {
            throw InputError("two-way layout needs 4 sample sizes");
        }
        if (hypothesis == StudyHypothesis::group) {
            throw InputError("two-way layout tests factorA, factorB or interaction");
        }
    }
    if (cov_setting == CovSetting::S5 && d % 4 != 0) {
        throw InputError("S5 needs d to be a multiple of 4");
    }
    if ((cov_setting == CovSetting::S6 || cov_setting == CovSetting::S7) && d < 2) {
        throw InputError("S6 and S7 need d >= 2");
    }
    for (Index n : sample_sizes) {
        if (n < 2) {
            throw InputError("every sample size must be at least 2");
        }
    }
    if (!(shift >= 0.0) || !std::isfinite(shift)) {
        throw InputError("shift must be a finite value >= 0");
    }
    if (nsim == 0 || nboot == 0) {
        throw InputError("nsim and nboot must be positive");
    }
    if (methods.empty()) {
        throw InputError("at least one method is required");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InputError("alpha must lie in (0, 1)");
    }
    if (!group_order.empty()) {
        std::vector<Index> sorted = group_order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t g = 0; g < sorted.size(); ++g) {
            if (sorted[g] != static_cast<Index>(g)) {
                throw InputError("group_order must be a permutation of the groups");
            }
        }
        if (static_cast<Index>(group_order.size()) != group_count(*this)) {
            throw InputError("group_order must list every group");
        }
    }
}

SymMatrix covariance_setting(CovSetting id, Index d, Index index) {
    const int s = setting_number(id);
    const Index groups = s <= 7 ? 2 : 4;
    if (index < 0 || index >= groups) {
        std::ostringstream os;
        os << to_string(id) << " has " << groups << " groups or cells; index " << index << " is out of range";
        throw InputError(os.str());
    }
    if (d < 1) {
        throw InputError("d must be positive");
    }
    const bool second = index == 1;
    const auto ell = static_cast<double>(index + 1);
    switch (id) {
    case CovSetting::S1: return SymMatrix(compound_symmetry(d, 1.0));
    case CovSetting::S2: return SymMatrix(autoregressive(d, 0.6));
    case CovSetting::S3: return SymMatrix(compound_symmetry(d, second ? 3.0 : 1.0));
    case CovSetting::S4: {
        Matrix m = autoregressive(d, 0.6);
        if (second) {
            m += 2.0 * linalg::identity(d);
        }
        return SymMatrix(m);
    }
    case CovSetting::S5: {
        if (d % 4 != 0) {
            throw InputError("S5 needs d to be a multiple of 4");
        }
        std::vector<Matrix> blocks(static_cast<std::size_t>(d / 4), s5_block());
        Matrix m = linalg::direct_sum(blocks);
        if (second) {
            m += 0.5 * jd(d);
        }
        return SymMatrix(m);
    }
    case CovSetting::S6:
    case CovSetting::S7: {
        if (d < 2) {
            throw InputError("S6 and S7 need d >= 2");
        }
        Matrix base;
        if (id == CovSetting::S6) {
            base = autoregressive(d, 0.6);
        } else {
            base = Matrix::Zero(d, d);
            for (Index r = 0; r < d; ++r) {
                base(r, r) = std::pow(std::numbers::sqrt2, static_cast<double>(r));
            }
        }
        Matrix m = halve_last(base);
        if (second) {
            m += 0.5 * jd(d);
        }
        return SymMatrix(m);
    }
    case CovSetting::S8: return SymMatrix(compound_symmetry(d, 1.0));
    case CovSetting::S9: return SymMatrix(autoregressive(d, 0.6));
    case CovSetting::S10: return SymMatrix(compound_symmetry(d, ell));
    case CovSetting::S11: return SymMatrix(autoregressive(d, 0.6) + ell * linalg::identity(d));
    }
    throw InputError("unknown covariance setting");
}

double ErrorSampler::operator()(Philox& rng) const {
    switch (law_) {
    case ErrorLaw::normal: {
        std::normal_distribution<double> z;
        return z(rng);
    }
    case ErrorLaw::chi2_3: {
        std::chi_squared_distribution<double> c(3.0);
        return (c(rng) - 3.0) / std::sqrt(6.0);
    }
    case ErrorLaw::lognormal: {
        std::lognormal_distribution<double> ln(0.0, 1.0);
        const double e = std::numbers::e;
        return (ln(rng) - std::sqrt(e)) / std::sqrt((e - 1.0) * e);
    }
    case ErrorLaw::t3: {
        std::student_t_distribution<double> t(3.0);
        return t(rng) / std::sqrt(3.0);
    }
    case ErrorLaw::double_exponential: {
        std::exponential_distribution<double> ex(1.0);
        const double x = ex(rng) - ex(rng);  // Laplace(0, 1), variance 2
        return x / std::numbers::sqrt2;
    }
    }
    return 0.0;
}

GroupedSample generate_dataset(const SimulationConfig& config, std::size_t rep) {
    config.validate();
    const Index a = group_count(config);
    const ErrorSampler eps(config.error_law);
    std::vector<Matrix> generated;
    generated.reserve(static_cast<std::size_t>(a));
    for (Index g = 0; g < a; ++g) {
        const SymMatrix root = linalg::psd_sqrt(covariance_setting(config.cov_setting, config.d, g));
        const Index n = config.sample_sizes[static_cast<std::size_t>(g)];
        Philox rng(config.seed, derive_stream({static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(g), kDataTag}));
        Matrix e(n, config.d);
        for (Index k = 0; k < n; ++k) {
            for (Index s = 0; s < config.d; ++s) {
                e(k, s) = eps(rng);
            }
        }
        Matrix x = e * root.matrix();
        if (g == a - 1 && config.shift != 0.0) {
            x.array() += config.shift;
        }
        generated.push_back(std::move(x));
    }
    if (config.group_order.empty()) {
        return GroupedSample(std::move(generated));
    }
    std::vector<Matrix> placed(generated.size());
    for (std::size_t g = 0; g < generated.size(); ++g) {
        placed[static_cast<std::size_t>(config.group_order[g])] = std::move(generated[g]);
    }
    return GroupedSample(std::move(placed));
}

const MethodResult& StudyReport::at(Method m) const {
    for (const MethodResult& r : results) {
        if (r.method == m) {
            return r;
        }
    }
    throw InputError(std::string("method ") + std::string(to_string(m)) + " was not part of the study");
}

double monte_carlo_se(double rate, std::size_t nsim) {
    return std::sqrt(rate * (1.0 - rate) / static_cast<double>(nsim));
}

StudyReport run_study(const SimulationConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const HypothesisSpec hyp = study_hypothesis(config);
    const std::size_t m = config.methods.size();

    // Bootstrap stream id for each analysed position.
    std::vector<std::uint64_t> streams;
    if (!config.group_order.empty()) {
        streams.resize(config.group_order.size());
        for (std::size_t g = 0; g < config.group_order.size(); ++g) {
            streams[static_cast<std::size_t>(config.group_order[g])] = g;
        }
    }

    std::vector<unsigned char> reject(config.nsim * m, 0);
    parallel_for(config.nsim, config.workers, [&](std::size_t rep) {
        const GroupedSample sample = generate_dataset(config, rep);
        BootstrapConfig boot;
        boot.B = config.nboot;
        boot.seed = derive_stream({config.seed, static_cast<std::uint64_t>(rep), kBootTag});
        boot.workers = 1;
        boot.group_streams = streams;

        for (std::size_t j = 0; j < m; ++j) {
            double p = 1.0;
            switch (config.methods[j]) {
            case Method::wts_chi2:
                p = wts_chi2_pvalue(wts_statistic(estimate(sample), hyp), hyp);
                break;
            case Method::wts_pbs:
                boot.method = BootstrapMethod::parametric;
                p = bootstrap_test(sample, hyp, boot, TestStatistic::wts).p_value;
                break;
            case Method::mats_wild:
                boot.method = BootstrapMethod::wild;
                boot.wild_weights = WildWeights::standard_normal;
                p = bootstrap_test(sample, hyp, boot, TestStatistic::mats).p_value;
                break;
            case Method::mats_pbs:
                boot.method = BootstrapMethod::parametric;
                p = bootstrap_test(sample, hyp, boot, TestStatistic::mats).p_value;
                break;
            case Method::mats_npbs:
                boot.method = BootstrapMethod::nonparametric;
                p = bootstrap_test(sample, hyp, boot, TestStatistic::mats).p_value;
                break;
            }
            reject[rep * m + j] = p <= config.alpha ? 1 : 0;
        }
    });

    StudyReport report;
    report.config = config;
    for (std::size_t j = 0; j < m; ++j) {
        MethodResult r;
        r.method = config.methods[j];
        for (std::size_t rep = 0; rep < config.nsim; ++rep) {
            r.rejections += reject[rep * m + j];
        }
        r.rejection_rate = static_cast<double>(r.rejections) / static_cast<double>(config.nsim);
        r.monte_carlo_se = monte_carlo_se(r.rejection_rate, config.nsim);
        report.results.push_back(r);
    }
    report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::vector<StudyReport> run_power_study(const SimulationConfig& config, const std::vector<double>& delta_grid) {
    if (delta_grid.empty()) {
        throw InputError("power study needs at least one shift");
    }
    std::vector<StudyReport> out;
    out.reserve(delta_grid.size());
    for (double delta : delta_grid) {
        SimulationConfig c = config;
        c.shift = delta;
        out.push_back(run_study(c));
    }
    return out;
}

namespace {

std::string sizes_string(const std::vector<Index>& n) {
    std::ostringstream os;
    for (std::size_t i = 0; i < n.size(); ++i) {
        os << (i ? ";" : "") << n[i];
    }
    return os.str();
}

}  // namespace

void write_csv_header(std::ostream& out) {
    out << "layout,d,cov_setting,error_law,sample_sizes,shift,hypothesis,nsim,nboot,alpha,seed,"
           "method,rejections,rejection_rate,monte_carlo_se,elapsed_seconds\n";
}

void write_csv_rows(std::ostream& out, const StudyReport& report) {
    const SimulationConfig& c = report.config;
    for (const MethodResult& r : report.results) {
        out << to_string(c.layout) << ',' << c.d << ',' << to_string(c.cov_setting) << ','
            << to_string(c.error_law) << ',' << sizes_string(c.sample_sizes) << ',' << c.shift << ','
            << to_string(c.hypothesis) << ',' << c.nsim << ',' << c.nboot << ',' << c.alpha << ',' << c.seed
            << ',' << to_string(r.method) << ',' << r.rejections << ',' << r.rejection_rate << ','
            << r.monte_carlo_se << ',' << report.elapsed_seconds << '\n';
    }
}

std::string to_json(const StudyReport& report) {
    const SimulationConfig& c = report.config;
    nlohmann::json cfg = {
        {"layout", to_string(c.layout)},
        {"d", c.d},
        {"cov_setting", to_string(c.cov_setting)},
        {"error_law", to_string(c.error_law)},
        {"sample_sizes", c.sample_sizes},
        {"shift", c.shift},
        {"hypothesis", to_string(c.hypothesis)},
        {"nsim", c.nsim},
        {"nboot", c.nboot},
        {"alpha", c.alpha},
        {"seed", c.seed},
    };
    nlohmann::json rows = nlohmann::json::array();
    for (const MethodResult& r : report.results) {
        rows.push_back({{"method", to_string(r.method)},
                        {"rejections", r.rejections},
                        {"rejection_rate", r.rejection_rate},
                        {"monte_carlo_se", r.monte_carlo_se}});
    }
    nlohmann::json j = {{"config", cfg}, {"results", rows}, {"elapsed_seconds", report.elapsed_seconds}};
    return j.dump();
}

SimulationConfig config_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw InputError("config must be a flat JSON object");
    }
    if (!j.contains("seed")) {
        throw InputError("config must set \"seed\"");
    }

    SimulationConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "layout") {
                c.layout = parse_layout(value.get<std::string>());
            } else if (key == "d") {
                c.d = value.get<Index>();
            } else if (key == "cov_setting") {
                c.cov_setting = parse_cov_setting(value.get<std::string>());
            } else if (key == "error_law") {
                c.error_law = parse_error_law(value.get<std::string>());
            } else if (key == "sample_sizes") {
                c.sample_sizes = value.get<std::vector<Index>>();
            } else if (key == "shift") {
                c.shift = value.get<double>();
            } else if (key == "hypothesis") {
                c.hypothesis = parse_study_hypothesis(value.get<std::string>());
            } else if (key == "nsim") {
                c.nsim = value.get<std::size_t>();
            } else if (key == "nboot") {
                c.nboot = value.get<std::size_t>();
            } else if (key == "methods") {
                c.methods.clear();
                for (const auto& name : value) {
                    c.methods.push_back(parse_method(name.get<std::string>()));
                }
            } else if (key == "alpha") {
                c.alpha = value.get<double>();
            } else if (key == "seed") {
                c.seed = value.get<std::uint64_t>();
            } else if (key == "workers") {
                c.workers = value.get<unsigned>();
            } else if (key == "deltas") {
                // Consumed by the power subcommand.
            } else {
                throw InputError("unknown config key \"" + key + "\"");
            }
        }
    } catch (const nlohmann::json::type_error& e) {
        throw InputError(std::string("config value has the wrong type: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace mats
