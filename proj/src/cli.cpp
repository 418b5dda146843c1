#include "mats/cli.hpp"

#include "mats/error.hpp"
#include "mats/simstudy.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace mats::cli {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

// One CSV record with RFC 4180 quoting. Embedded newlines inside quotes are
// not supported.
std::vector<std::string> split_record(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) {
        throw InputError("unterminated quoted field");
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::optional<double> parse_real(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::string format_real(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c == '"' ? "\"\"" : std::string(1, c);
    }
    return out + "\"";
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    return in;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

struct TestOutcome {
    std::string hypothesis;
    double statistic = 0.0;
    double p_value = 1.0;
    double quantile_95 = 0.0;
    std::size_t B = 0;
    std::size_t n_degenerate = 0;
};

BootstrapConfig boot_config(const AnalysisRequest& r, const MethodChoice& m) {
    BootstrapConfig cfg;
    cfg.method = m.bootstrap;
    cfg.B = r.B;
    cfg.seed = r.seed.value_or(0);
    cfg.workers = r.workers;
    return cfg;
}

GroupedSample load_sample(const AnalysisRequest& r) {
    if (r.data_path.empty()) {
        throw InputError("--data is required");
    }
    if (r.group_column.empty() || r.value_columns.empty()) {
        throw InputError("--group-col and --value-cols are required");
    }
    return ingest_csv(r.data_path, r.group_column, r.value_columns);
}

int run_test(const AnalysisRequest& r, std::ostream& out) {
    const GroupedSample sample = load_sample(r);
    const MethodChoice method = parse_method_choice(r.method);
    const std::vector<HypothesisSpec> hyps =
        build_hypotheses(parse_hypothesis(r.hypothesis), sample.groups(), sample.dim());

    std::vector<TestOutcome> outcomes;
    for (const HypothesisSpec& h : hyps) {
        TestOutcome o;
        o.hypothesis = h.label;
        if (method.chi2) {
            o.statistic = wts_statistic(estimate(sample), h);
            o.p_value = wts_chi2_pvalue(o.statistic, h);
            o.quantile_95 = h.rank > 0 ? chi2_quantile(0.95, static_cast<double>(h.rank)) : 0.0;
        } else {
            const BootstrapResult res = bootstrap_test(sample, h, boot_config(r, method), method.statistic);
            o.statistic = res.observed;
            o.p_value = res.p_value;
            o.quantile_95 = res.quantile_95;
            o.B = r.B;
            o.n_degenerate = res.n_degenerate_replicates;
        }
        outcomes.push_back(o);
    }

    const std::uint64_t seed = r.seed.value_or(0);
    switch (r.output) {
    case OutputFormat::json:
        for (const TestOutcome& o : outcomes) {
            json j = {{"hypothesis", o.hypothesis},
                      {"statistic", o.statistic},
                      {"p_value", o.p_value},
                      {"method", method.name},
                      {"B", o.B},
                      {"seed", seed},
                      {"quantile_95", o.quantile_95},
                      {"n_degenerate_replicates", o.n_degenerate},
                      {"alpha", r.alpha},
                      {"reject", o.p_value <= r.alpha}};
            out << j.dump() << '\n';
        }
        break;
    case OutputFormat::csv:
        out << "hypothesis,statistic,p_value,method,B,seed,quantile_95,n_degenerate_replicates,alpha,reject\n";
        for (const TestOutcome& o : outcomes) {
            out << o.hypothesis << ',' << format_real(o.statistic) << ',' << format_real(o.p_value) << ','
                << method.name << ',' << o.B << ',' << seed << ',' << format_real(o.quantile_95) << ','
                << o.n_degenerate << ',' << format_real(r.alpha) << ',' << (o.p_value <= r.alpha ? 1 : 0)
                << '\n';
        }
        break;
    case OutputFormat::text:
        for (const TestOutcome& o : outcomes) {
            out << "hypothesis: " << o.hypothesis << '\n'
                << "  statistic:   " << o.statistic << '\n'
                << "  method:      " << method.name << " (B = " << o.B << ", seed = " << seed << ")\n"
                << "  p-value:     " << o.p_value << '\n'
                << "  quantile_95: " << o.quantile_95 << '\n';
            if (o.n_degenerate > 0) {
                out << "  degenerate replicates: " << o.n_degenerate << '\n';
            }
        }
        break;
    }
    return 0;
}

int run_ci(const AnalysisRequest& r, std::ostream& out) {
    const GroupedSample sample = load_sample(r);
    const MethodChoice method = parse_method_choice(r.method);
    if (method.statistic != TestStatistic::mats) {
        throw InputError("ci is built on the MATS; use --method pbs, wild or npbs");
    }
    Matrix h;
    if (!r.contrasts_path.empty()) {
        h = read_matrix_csv(r.contrasts_path);
    } else {
        const std::vector<HypothesisSpec> hyps =
            build_hypotheses(parse_hypothesis(r.hypothesis), sample.groups(), sample.dim());
        if (hyps.size() != 1) {
            throw InputError("ci needs a single contrast matrix; pass --contrasts");
        }
        h = hyps.front().H;
    }
    const double level = 1.0 - r.alpha;
    const BootstrapConfig cfg = boot_config(r, method);
    const ConfidenceEllipsoid e = ellipsoid(sample, h, level, cfg);
    const SimultaneousCIs cis = simultaneous_cis(sample, h, level, cfg, r.aggregate);
    std::vector<Vector> boundary;
    if (h.rows() == 2) {
        boundary = ellipse_boundary(e, 360);
    }
    const char* agg = r.aggregate == Aggregate::sum ? "sum" : "max";

    switch (r.output) {
    case OutputFormat::json: {
        json axes = json::array();
        for (Index s = 0; s < e.axes.cols(); ++s) {
            axes.push_back(vector_json(e.axes.col(s)));
        }
        json intervals = json::array();
        for (Index l = 0; l < cis.estimates.size(); ++l) {
            intervals.push_back({{"estimate", cis.estimates(l)},
                                 {"lower", cis.lower(l)},
                                 {"upper", cis.upper(l)},
                                 {"half_width", cis.half_widths(l)}});
        }
        json j = {{"center", vector_json(e.center)},
                  {"axes", axes},
                  {"axis_lengths", vector_json(e.axis_lengths)},
                  {"eigenvalues", vector_json(e.eigenvalues)},
                  {"level", level},
                  {"quantile", e.quantile},
                  {"method", method.name},
                  {"B", r.B},
                  {"seed", r.seed.value_or(0)},
                  {"aggregate", agg},
                  {"ci_quantile", cis.quantile},
                  {"intervals", intervals},
                  {"n_degenerate_replicates", cis.n_degenerate_replicates}};
        if (!boundary.empty()) {
            json poly = json::array();
            for (const Vector& p : boundary) {
                poly.push_back({p(0), p(1)});
            }
            j["boundary"] = poly;
        }
        out << j.dump() << '\n';
        break;
    }
    case OutputFormat::csv:
        if (!boundary.empty()) {
            out << "x,y\n";
            for (const Vector& p : boundary) {
                out << format_real(p(0)) << ',' << format_real(p(1)) << '\n';
            }
        } else {
            out << "contrast,estimate,lower,upper,half_width\n";
            for (Index l = 0; l < cis.estimates.size(); ++l) {
                out << l + 1 << ',' << format_real(cis.estimates(l)) << ',' << format_real(cis.lower(l)) << ','
                    << format_real(cis.upper(l)) << ',' << format_real(cis.half_widths(l)) << '\n';
            }
        }
        break;
    case OutputFormat::text: {
        const Eigen::IOFormat row(Eigen::StreamPrecision, Eigen::DontAlignCols, ", ", ", ", "", "", "(", ")");
        out << "confidence ellipsoid (level " << level << ", quantile " << e.quantile << ")\n"
            << "  center: " << e.center.transpose().format(row) << '\n';
        for (Index s = 0; s < e.axes.cols(); ++s) {
            out << "  axis " << s + 1 << ": direction " << e.axes.col(s).transpose().format(row)
                << ", half-length " << e.axis_lengths(s) << '\n';
        }
        out << "simultaneous intervals (" << agg << ", quantile " << cis.quantile << ")\n";
        for (Index l = 0; l < cis.estimates.size(); ++l) {
            out << "  h" << l + 1 << ": " << cis.estimates(l) << " [" << cis.lower(l) << ", " << cis.upper(l)
                << "]\n";
        }
        if (!boundary.empty()) {
            out << "boundary\nx,y\n";
            for (const Vector& p : boundary) {
                out << format_real(p(0)) << ',' << format_real(p(1)) << '\n';
            }
        }
        break;
    }
    }
    return 0;
}

std::string read_file(const std::string& path) {
    std::ifstream in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit_reports(const std::vector<StudyReport>& reports, OutputFormat fmt, std::ostream& out) {
    if (fmt == OutputFormat::json) {
        for (const StudyReport& rep : reports) {
            out << to_json(rep) << '\n';
        }
        return;
    }
    write_csv_header(out);
    for (const StudyReport& rep : reports) {
        write_csv_rows(out, rep);
    }
}

int run_simulation(const AnalysisRequest& r, std::ostream& out) {
    if (r.config_path.empty()) {
        throw InputError("--config is required");
    }
    const std::string text = read_file(r.config_path);
    SimulationConfig cfg = config_from_json(text);
    if (r.workers != 1) {
        cfg.workers = r.workers;
    }
    if (r.subcommand == Subcommand::simulate) {
        emit_reports({run_study(cfg)}, r.output, out);
        return 0;
    }
    std::vector<double> deltas{0.0, 0.5, 1.0, 1.5, 2.0, 3.0};
    const json j = json::parse(text);
    if (j.contains("deltas")) {
        try {
            deltas = j.at("deltas").get<std::vector<double>>();
        } catch (const json::exception&) {
            throw InputError("\"deltas\" must be an array of numbers");
        }
    }
    emit_reports(run_power_study(cfg, deltas), r.output, out);
    return 0;
}

}  // namespace

HypothesisChoice parse_hypothesis(std::string_view s) {
    HypothesisChoice c;
    if (s == "one-way") {
        return c;
    }
    if (s.starts_with("two-way=")) {
        const std::string_view dims = s.substr(8);
        const auto x = dims.find('x');
        long long a = 0;
        long long b = 0;
        const bool ok = x != std::string_view::npos &&
                        std::from_chars(dims.data(), dims.data() + x, a).ptr == dims.data() + x &&
                        std::from_chars(dims.data() + x + 1, dims.data() + dims.size(), b).ptr ==
                            dims.data() + dims.size();
        if (!ok || a < 2 || b < 2) {
            throw InputError("expected two-way=AxB with A, B >= 2, got '" + std::string(s) + "'");
        }
        c.kind = HypothesisChoice::Kind::two_way;
        c.a = a;
        c.b = b;
        return c;
    }
    if (s.starts_with("matrix=") && s.size() > 7) {
        c.kind = HypothesisChoice::Kind::matrix;
        c.path = std::string(s.substr(7));
        return c;
    }
    throw InputError("unknown hypothesis '" + std::string(s) + "'; use one-way, two-way=AxB or matrix=<file>");
}

MethodChoice parse_method_choice(std::string_view s) {
    MethodChoice m;
    m.name = std::string(s);
    if (s == "pbs") {
        return m;
    }
    if (s == "wild") {
        m.bootstrap = BootstrapMethod::wild;
        return m;
    }
    if (s == "npbs") {
        m.bootstrap = BootstrapMethod::nonparametric;
        return m;
    }
    if (s == "wts-pbs") {
        m.statistic = TestStatistic::wts;
        return m;
    }
    if (s == "wts-chi2") {
        m.statistic = TestStatistic::wts;
        m.chi2 = true;
        return m;
    }
    throw InputError("unknown method '" + std::string(s) + "'; use pbs, wild, npbs, wts-pbs or wts-chi2");
}

GroupedSample parse_csv(std::istream& in, const std::string& group_column,
                        const std::vector<std::string>& value_columns, std::string_view source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError(std::string(source) + ": empty file, a header row is required");
    }
    if (line.starts_with("\xEF\xBB\xBF")) {
        line.erase(0, 3);
    }
    const std::vector<std::string> header = split_record(line);
    auto column_of = [&](const std::string& name) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (trim(header[c]) == name) {
                return c;
            }
        }
        throw InputError(std::string(source) + ": missing column '" + name + "'");
    };
    const std::size_t gcol = column_of(group_column);
    std::vector<std::size_t> vcols;
    for (const std::string& v : value_columns) {
        vcols.push_back(column_of(v));
    }

    std::vector<std::string> labels;
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<std::vector<double>>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        std::vector<std::string> fields;
        try {
            fields = split_record(line);
        } catch (const InputError& e) {
            throw InputError(std::string(source) + ": row " + std::to_string(lineno) + ": " + e.what());
        }
        if (fields.size() != header.size()) {
            throw InputError(std::string(source) + ": row " + std::to_string(lineno) + " has " +
                             std::to_string(fields.size()) + " fields, header has " +
                             std::to_string(header.size()));
        }
        const std::string label(trim(fields[gcol]));
        if (label.empty()) {
            throw InputError(std::string(source) + ": row " + std::to_string(lineno) + ", column '" +
                             group_column + "': empty group label");
        }
        std::vector<double> values;
        for (std::size_t k = 0; k < vcols.size(); ++k) {
            const std::optional<double> v = parse_real(fields[vcols[k]]);
            if (!v) {
                throw InputError(std::string(source) + ": row " + std::to_string(lineno) + ", column '" +
                                 value_columns[k] + "': '" + fields[vcols[k]] + "' is not a finite number");
            }
            values.push_back(*v);
        }
        auto [it, inserted] = index.try_emplace(label, labels.size());
        if (inserted) {
            labels.push_back(label);
            rows.emplace_back();
        }
        rows[it->second].push_back(std::move(values));
    }
    if (labels.empty()) {
        throw InputError(std::string(source) + ": no data rows");
    }

    std::vector<Matrix> blocks;
    const auto d = static_cast<Index>(value_columns.size());
    for (std::size_t g = 0; g < labels.size(); ++g) {
        if (rows[g].size() < 2) {
            throw InputError(std::string(source) + ": group '" + labels[g] + "' has fewer than 2 rows");
        }
        Matrix m(static_cast<Index>(rows[g].size()), d);
        for (std::size_t k = 0; k < rows[g].size(); ++k) {
            for (Index s = 0; s < d; ++s) {
                m(static_cast<Index>(k), s) = rows[g][k][static_cast<std::size_t>(s)];
            }
        }
        blocks.push_back(std::move(m));
    }
    return GroupedSample(std::move(blocks), std::move(labels));
}

GroupedSample ingest_csv(const std::string& path, const std::string& group_column,
                         const std::vector<std::string>& value_columns) {
    std::ifstream in = open_input(path);
    return parse_csv(in, group_column, value_columns, path);
}

void write_normalized_csv(std::ostream& out, const GroupedSample& sample, const std::string& group_column,
                          const std::vector<std::string>& value_columns) {
    if (static_cast<Index>(value_columns.size()) != sample.dim()) {
        throw DimensionError("need one column name per component");
    }
    out << csv_escape(group_column);
    for (const std::string& v : value_columns) {
        out << ',' << csv_escape(v);
    }
    out << '\n';
    for (Index g = 0; g < sample.groups(); ++g) {
        const std::string label =
            sample.labels().empty() ? std::to_string(g + 1) : sample.labels()[static_cast<std::size_t>(g)];
        const Matrix& x = sample.group(g);
        for (Index k = 0; k < x.rows(); ++k) {
            out << csv_escape(label);
            for (Index s = 0; s < x.cols(); ++s) {
                out << ',' << format_real(x(k, s));
            }
            out << '\n';
        }
    }
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in = open_input(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        std::vector<double> row;
        const std::vector<std::string> fields = split_record(line);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::optional<double> v = parse_real(fields[c]);
            if (!v) {
                throw InputError(path + ": row " + std::to_string(lineno) + ", column " + std::to_string(c + 1) +
                                 ": '" + fields[c] + "' is not a finite number");
            }
            row.push_back(*v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw InputError(path + ": row " + std::to_string(lineno) + " has a different number of columns");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw InputError(path + ": matrix file is empty");
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
        }
    }
    return m;
}

std::vector<HypothesisSpec> build_hypotheses(const HypothesisChoice& choice, Index a, Index d) {
    switch (choice.kind) {
    case HypothesisChoice::Kind::one_way:
        return {one_way_hypothesis(a, d)};
    case HypothesisChoice::Kind::two_way:
        if (choice.a * choice.b != a) {
            throw InputError("two-way=" + std::to_string(choice.a) + "x" + std::to_string(choice.b) + " needs " +
                             std::to_string(choice.a * choice.b) + " groups, the data have " + std::to_string(a));
        }
        return {two_way_hypothesis(choice.a, choice.b, d, TwoWayEffect::factor_a),
                two_way_hypothesis(choice.a, choice.b, d, TwoWayEffect::factor_b),
                two_way_hypothesis(choice.a, choice.b, d, TwoWayEffect::interaction)};
    case HypothesisChoice::Kind::matrix: {
        Matrix h = read_matrix_csv(choice.path);
        if (h.cols() != a * d) {
            throw DimensionError(choice.path + ": hypothesis matrix has " + std::to_string(h.cols()) +
                                 " columns, the data need a*d = " + std::to_string(a * d));
        }
        return {HypothesisSpec::from_contrast(std::move(h), "custom")};
    }
    }
    throw InputError("unknown hypothesis kind");
}

int run(const AnalysisRequest& request, std::ostream& out, std::ostream& err) {
    try {
        switch (request.subcommand) {
        case Subcommand::test: return run_test(request, out);
        case Subcommand::ci: return run_ci(request, out);
        case Subcommand::simulate:
        case Subcommand::power: return run_simulation(request, out);
        }
        return 1;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 1;
    }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Heteroscedastic MANOVA with the modified ANOVA-type statistic"};
    app.require_subcommand(1);

    AnalysisRequest req;
    std::string output = "json";
    std::string agg = "sum";
    std::uint64_t seed = 0;

    const std::map<std::string, OutputFormat> formats{
        {"json", OutputFormat::json}, {"csv", OutputFormat::csv}, {"text", OutputFormat::text}};

    auto add_data_options = [&](CLI::App* sub) {
        sub->add_option("--data", req.data_path, "CSV file with a header row")->required();
        sub->add_option("--group-col", req.group_column, "Grouping column; groups keep first-appearance order")
            ->required();
        sub->add_option("--value-cols", req.value_columns, "Comma-separated response columns")
            ->delimiter(',')
            ->required();
        sub->add_option("--hypothesis", req.hypothesis,
                        "one-way | two-way=AxB (cells in row-major order) | matrix=<file>");
        sub->add_option("--method", req.method, "pbs | wild | npbs | wts-pbs | wts-chi2");
        sub->add_option("--B", req.B, "Bootstrap replicates")->check(CLI::PositiveNumber);
        sub->add_option("--alpha", req.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--seed", seed, "Random seed (default 0)");
        sub->add_option("--out", output, "json | csv | text")->check(CLI::IsMember({"json", "csv", "text"}));
        sub->add_option("--workers", req.workers, "Worker threads, 0 = all cores");
    };

    CLI::App* test = app.add_subcommand("test", "Test H mu = 0");
    add_data_options(test);

    CLI::App* ci = app.add_subcommand("ci", "Confidence ellipsoid and simultaneous intervals for H mu");
    add_data_options(ci);
    ci->add_option("--contrasts", req.contrasts_path, "Contrast matrix CSV (q rows, a*d columns)");
    ci->add_option("--agg", agg, "sum | max")->check(CLI::IsMember({"sum", "max"}));

    CLI::App* simulate = app.add_subcommand("simulate", "Type-I error study from a JSON config");
    CLI::App* power = app.add_subcommand("power", "Power study over the config's \"deltas\"");
    for (CLI::App* sub : {simulate, power}) {
        sub->add_option("--config", req.config_path, "Flat JSON config; \"seed\" is required")->required();
        sub->add_option("--out", output, "json | csv")->check(CLI::IsMember({"json", "csv", "text"}));
        sub->add_option("--workers", req.workers, "Replication worker threads, 0 = all cores");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    req.output = formats.at(output);
    req.aggregate = agg == "max" ? Aggregate::max : Aggregate::sum;
    if (test->parsed()) {
        req.subcommand = Subcommand::test;
    } else if (ci->parsed()) {
        req.subcommand = Subcommand::ci;
    } else if (simulate->parsed()) {
        req.subcommand = Subcommand::simulate;
    } else {
        req.subcommand = Subcommand::power;
    }
    if ((test->parsed() && test->count("--seed") > 0) || (ci->parsed() && ci->count("--seed") > 0)) {
        req.seed = seed;
    }
    return run(req, out, err);
}

}  // namespace mats::cli
