// sizemarkov command line tool.
//
// Subcommands:
//   analyze   estimate transition matrices, trend and entropy from a panel
//   simulate  generate a synthetic panel from a known chain
//   verify    run the verification suite over the bundled reference fixtures
//   ck        two-step consistency check (product vs direct window estimate)
//
// Exit codes: 0 success, 1 internal error, 2 input error, 3 validation
// error, 4 numeric error, 5 verification failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sizemarkov/analytics.hpp"
#include "sizemarkov/classifier.hpp"
#include "sizemarkov/estimator.hpp"
#include "sizemarkov/fixtures.hpp"
#include "sizemarkov/matrix_io.hpp"
#include "sizemarkov/panel.hpp"
#include "sizemarkov/report_io.hpp"
#include "sizemarkov/simulator.hpp"
#include "sizemarkov/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sizemarkov;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitVerification = 5;

int exit_code_for(const Error& e) {
    switch (e.category()) {
        case ErrorCategory::input: return kExitInput;
        case ErrorCategory::validation: return kExitValidation;
        case ErrorCategory::numeric: return kExitNumeric;
    }
    return kExitInternal;
}

std::string default_out_dir() {
    if (const char* env = std::getenv("SIZEMARKOV_OUT")) return env;
    return ".";
}

YearRange parse_year_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw InputError("year range must look like A:B, got '" + text + "'");
    const auto a = csv::parse_int(text.substr(0, colon));
    const auto b = csv::parse_int(text.substr(colon + 1));
    if (!a || !b) throw InputError("year range must be integer A:B, got '" + text + "'");
    return validated_year_range(static_cast<int>(*a), static_cast<int>(*b));
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << content;
    if (!out) throw InputError("failed while writing " + path.string());
}

json matrix_json(const TransitionMatrix& tm) {
    json j;
    j["n_states"] = tm.n_states;
    j["origin_year"] = tm.origin_year;
    j["dest_year"] = tm.dest_year;
    j["undefined_columns"] = tm.undefined_columns;
    j["included_entities"] = tm.included_entities;
    json probs = json::array();
    for (int d = 0; d < tm.n_states; ++d) {
        json row = json::array();
        for (int o = 0; o < tm.n_states; ++o) row.push_back(tm.probs(d, o));
        probs.push_back(std::move(row));
    }
    j["probs"] = std::move(probs);
    if (tm.has_counts()) {
        json counts = json::array();
        for (int d = 0; d < tm.n_states; ++d) {
            json row = json::array();
            for (int o = 0; o < tm.n_states; ++o) row.push_back(tm.count(d, o));
            counts.push_back(std::move(row));
        }
        j["counts"] = std::move(counts);
    }
    return j;
}

std::string format_state_list(const std::vector<int>& states) {
    std::string out;
    for (int s : states) {
        if (!out.empty()) out += ",";
        out += std::to_string(s);
    }
    return out;
}

// ---------------------------------------------------------------------
// analyze

struct AnalyzeConfig {
    std::string input;
    std::string out = default_out_dir();
    std::string years;
    std::string scheme_path;
    std::string format = "both";
    std::string trend_weight = "dest";
    bool exclude_entry_exit = false;
    bool strict = false;
};

int run_analyze(const AnalyzeConfig& cfg) {
    const auto records = ingest_panel_file(cfg.input);
    const auto panel = cfg.years.empty() ? rectangularize(records)
                                         : rectangularize(records, parse_year_range(cfg.years));
    const auto scheme =
        cfg.scheme_path.empty() ? default_scheme() : load_scheme_file(cfg.scheme_path);
    const auto grid = classify_panel(panel, scheme);
    const auto chain = estimate_first_order_chain(grid);

    const fs::path out_dir(cfg.out);
    fs::create_directories(out_dir);
    const bool emit_csv = cfg.format == "csv" || cfg.format == "both";
    const bool emit_json = cfg.format == "json" || cfg.format == "both";
    const TrendOptions trend_options{
        cfg.trend_weight == "origin" ? TrendWeight::origin : TrendWeight::destination,
        cfg.exclude_entry_exit};

    std::vector<std::string> warnings;
    std::vector<TrendPoint> trend;
    std::vector<EntropyTable> entropies;
    std::vector<GroupEntropy> groups;
    json manifest_pairs = json::array();

    for (const auto& tm : chain) {
        if (!tm.undefined_columns.empty()) {
            const std::string msg = "matrix " + std::to_string(tm.origin_year) + "->" +
                                    std::to_string(tm.dest_year) +
                                    " has undefined origin states [" +
                                    format_state_list(tm.undefined_columns) + "]";
            if (cfg.strict) throw NumericError(msg + " (strict mode)");
            warnings.push_back(msg + "; analytics skip them");
        }

        const std::string stem =
            "matrix_" + std::to_string(tm.origin_year) + "_" + std::to_string(tm.dest_year);
        json pair;
        pair["origin_year"] = tm.origin_year;
        pair["dest_year"] = tm.dest_year;
        pair["included_entities"] = tm.included_entities;
        pair["undefined_columns"] = tm.undefined_columns;
        if (emit_csv) {
            write_text_file(out_dir / (stem + ".csv"), matrix_csv_string(tm.probs));
            pair["matrix_csv"] = stem + ".csv";
        }
        if (emit_json) {
            write_text_file(out_dir / (stem + ".json"), matrix_json(tm).dump(2) + "\n");
            pair["matrix_json"] = stem + ".json";
        }
        manifest_pairs.push_back(std::move(pair));

        const int marginal_year = trend_options.weight == TrendWeight::destination
                                      ? tm.dest_year
                                      : tm.origin_year;
        trend.push_back(transition_trend(tm, empirical_marginal(grid, marginal_year),
                                         trend_options));
        entropies.push_back(entropy_table(tm));
        if (scheme.n_states() >= 8)
            groups.push_back(group_entropy(entropies.back(), StateGrouping::standard(scheme.n_states())));
    }
    if (scheme.n_states() < 8)
        warnings.push_back("scheme has fewer than 8 states; group entropy not emitted");

    {
        std::ostringstream os;
        write_trend_csv(os, trend);
        write_text_file(out_dir / "trend.csv", os.str());
    }
    {
        std::ostringstream os;
        write_entropy_csv(os, entropies);
        write_text_file(out_dir / "entropy.csv", os.str());
    }
    {
        std::ostringstream os;
        write_entropy_long_csv(os, entropies);
        write_text_file(out_dir / "entropy_long.csv", os.str());
    }
    if (!groups.empty()) {
        std::ostringstream os;
        write_group_entropy_csv(os, groups);
        write_text_file(out_dir / "group_entropy.csv", os.str());
    }

    json manifest;
    manifest["tool"] = {{"name", "sizemarkov"}, {"version", kVersion}};
    manifest["command"] = "analyze";
    manifest["input"] = cfg.input;
    manifest["years"] = {panel.years().first, panel.years().last};
    manifest["scheme"] = cfg.scheme_path.empty() ? "default" : cfg.scheme_path;
    manifest["n_states"] = scheme.n_states();
    manifest["entities"] = panel.n_entities();
    manifest["records"] = records.size();
    manifest["trend_weight"] =
        trend_options.weight == TrendWeight::destination ? "dest" : "origin";
    manifest["trend_exclude_entry_exit"] = cfg.exclude_entry_exit;
    manifest["format"] = cfg.format;
    manifest["pairs"] = std::move(manifest_pairs);
    json outputs;
    outputs["trend"] = "trend.csv";
    outputs["entropy"] = "entropy.csv";
    outputs["entropy_long"] = "entropy_long.csv";
    if (!groups.empty()) outputs["group_entropy"] = "group_entropy.csv";
    manifest["outputs"] = std::move(outputs);
    manifest["warnings"] = warnings;
    manifest["quantization"] = "csv probabilities and series values rounded to 4 decimals; "
                               "json carries full precision";
    write_text_file(out_dir / "run_manifest.json", manifest.dump(2) + "\n");

    std::cout << "analyze: " << chain.size() << " transition matrices over years "
              << panel.years().first << ":" << panel.years().last << ", " << panel.n_entities()
              << " entities -> " << out_dir.string() << "\n";
    for (const auto& w : warnings) std::cout << "warning: " << w << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------
// simulate

struct SimulateConfig {
    int states = 13;
    std::string matrix_path;
    std::string initial_path;
    std::string scheme_path;
    std::int64_t entities = 1000;
    std::string years = "2000:2005";
    std::uint64_t seed = 42;
    std::string out = default_out_dir();
};

// Built-in demo chain: entries 1/2, 1/4, 1/8, 1/8 from state 0 into the
// first categories; existing firms keep 10/16, move up 3/16, down 2/16
// and exit 1/16 (edge mass folds into the neighbors).
StochasticMatrix demo_chain_matrix(int n_states) {
    StochasticMatrix m(n_states);
    const double entry[] = {0.5, 0.25, 0.125, 0.125};
    const int targets = std::min(4, n_states - 1);
    double assigned = 0.0;
    for (int k = 0; k < targets - 1; ++k) {
        m(k + 1, 0) = entry[k];
        assigned += entry[k];
    }
    m(targets, 0) = 1.0 - assigned;
    for (int i = 1; i < n_states; ++i) {
        const double exit = 0.0625, down = 0.125, up = 0.1875, stay = 0.625;
        m(0, i) += exit;
        if (i - 1 >= 1)
            m(i - 1, i) += down;
        else
            m(0, i) += down;
        if (i + 1 < n_states)
            m(i + 1, i) += up;
        else
            m(i, i) += up;
        m(i, i) += stay;
    }
    return m;
}

std::vector<double> load_initial_marginal(const fs::path& path, int n_states) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open initial marginal file " + path.string());
    std::string line;
    if (!std::getline(in, line) || csv::trim(line) != "state,probability")
        throw InputError("initial marginal file must start with 'state,probability'");
    std::vector<double> p(n_states, 0.0);
    while (std::getline(in, line)) {
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line, ',');
        if (fields.size() != 2)
            throw InputError("malformed initial marginal row: " + line);
        const auto state = csv::parse_int(csv::trim(fields[0]));
        const auto prob = csv::parse_double(csv::trim(fields[1]));
        if (!state || !prob || *state < 0 || *state >= n_states || *prob < 0.0)
            throw InputError("invalid initial marginal row: " + line);
        p[*state] = *prob;
    }
    double total = 0.0;
    for (double v : p) total += v;
    if (std::abs(total - 1.0) > 1e-6)
        throw ValidationError("initial marginal sums to " + csv::format_double(total));
    for (double& v : p) v /= total;
    return p;
}

// Columns of user-supplied matrices are renormalized so that 4-decimal
// files satisfy the exact stochasticity the chain requires.
StochasticMatrix renormalize_columns(StochasticMatrix m) {
    for (int i = 0; i < m.n_states(); ++i) {
        const double sum = m.column_sum(i);
        if (std::abs(sum - 1.0) > 2e-3)
            throw ValidationError("matrix column " + std::to_string(i) + " sums to " +
                                  csv::format_double(sum) + "; not a probability column");
        for (int j = 0; j < m.n_states(); ++j) m(j, i) /= sum;
    }
    return m;
}

int run_simulate(const SimulateConfig& cfg) {
    const auto scheme =
        cfg.scheme_path.empty() ? default_scheme() : load_scheme_file(cfg.scheme_path);
    if (cfg.states != scheme.n_states())
        throw ValidationError("--states " + std::to_string(cfg.states) +
                              " does not match the scheme's " +
                              std::to_string(scheme.n_states()) + " states");

    StochasticMatrix step = cfg.matrix_path.empty()
                                ? demo_chain_matrix(scheme.n_states())
                                : renormalize_columns(read_matrix_csv_file(cfg.matrix_path));
    if (step.n_states() != scheme.n_states())
        throw ValidationError("step matrix has " + std::to_string(step.n_states()) +
                              " states but the scheme defines " +
                              std::to_string(scheme.n_states()));

    std::vector<double> initial;
    if (cfg.initial_path.empty()) {
        initial.assign(scheme.n_states(), 1.0 / scheme.n_states());
    } else {
        initial = load_initial_marginal(cfg.initial_path, scheme.n_states());
    }

    const auto chain = make_homogeneous_chain(std::move(step), std::move(initial), cfg.seed);
    const auto sim = simulate_panel(chain, cfg.entities, parse_year_range(cfg.years), scheme);

    const fs::path out_dir(cfg.out);
    fs::create_directories(out_dir);
    std::ostringstream os;
    write_panel_csv(os, sim.panel);
    write_text_file(out_dir / "panel.csv", os.str());

    std::cout << "simulate: " << sim.panel.n_entities() << " entities over years "
              << sim.panel.years().first << ":" << sim.panel.years().last << " (seed "
              << cfg.seed << ") -> " << (out_dir / "panel.csv").string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------
// verify

struct VerifyConfig {
    std::string fixtures = "data/fixtures";
    std::string out;
    VerifyTolerances tolerances;
};

void require_positive(double tolerance, const std::string& name) {
    if (!(tolerance > 0.0))
        throw ValidationError(name + " must be positive, got " + csv::format_double(tolerance));
}

int run_verify(const VerifyConfig& cfg) {
    require_positive(cfg.tolerances.stochasticity, "--tolerance-stochastic");
    require_positive(cfg.tolerances.entropy, "--tolerance-entropy");
    require_positive(cfg.tolerances.ck_product, "--tolerance-ck");
    require_positive(cfg.tolerances.ck_direct, "--tolerance-direct");
    require_positive(cfg.tolerances.trend, "--tolerance-trend");
    const auto fixtures = load_fixture_set(cfg.fixtures);
    const auto report = run_verification(fixtures, cfg.tolerances);

    for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
    for (const auto& c : report.checks)
        std::cout << (c.pass ? "PASS" : "FAIL") << " " << c.check << " [" << c.location
                  << "] deviation=" << csv::format_double(c.deviation)
                  << " tolerance=" << csv::format_double(c.tolerance) << "\n";
    std::cout << (report.all_pass() ? "verify: all checks passed"
                                    : "verify: " + std::to_string(report.failed) +
                                          " check(s) failed")
              << " (" << report.checks.size() << " checks)\n";

    if (!cfg.out.empty()) {
        const fs::path out_dir(cfg.out);
        fs::create_directories(out_dir);
        json j;
        j["tool"] = {{"name", "sizemarkov"}, {"version", kVersion}};
        j["command"] = "verify";
        j["fixtures"] = cfg.fixtures;
        j["failed"] = report.failed;
        j["warnings"] = report.warnings;
        json checks = json::array();
        for (const auto& c : report.checks)
            checks.push_back({{"check", c.check},
                              {"location", c.location},
                              {"deviation", c.deviation},
                              {"tolerance", c.tolerance},
                              {"pass", c.pass}});
        j["checks"] = std::move(checks);
        write_text_file(out_dir / "verify_report.json", j.dump(2) + "\n");
    }
    return report.all_pass() ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------
// ck

struct CkConfig {
    std::string input;
    std::string fixtures;
    std::string years;
    std::string scheme_path;
    std::string out = default_out_dir();
    double tolerance = 2e-3;
    bool strict = false;
};

int run_ck(const CkConfig& cfg) {
    require_positive(cfg.tolerance, "--tolerance-ck");
    const YearRange window = parse_year_range(cfg.years);
    if (window.count() < 3)
        throw ValidationError("ck window must span at least 3 years, got " + cfg.years);

    std::vector<TransitionMatrix> steps;
    TransitionMatrix direct;
    if (!cfg.fixtures.empty()) {
        const auto fixtures = load_fixture_set(cfg.fixtures);
        const auto& window_fixture = fixtures.second_order_window.matrix;
        if (window.first != window_fixture.origin_year || window.last != window_fixture.dest_year)
            throw InputError("fixture set only provides a direct window matrix for " +
                             std::to_string(window_fixture.origin_year) + ":" +
                             std::to_string(window_fixture.dest_year));
        for (int y = window.first; y < window.last; ++y)
            steps.push_back(fixtures.first_order_from(y).matrix);
        direct = window_fixture;
    } else {
        // Balance over the input's full span; the window-counting rule
        // already excludes entities absent through the whole window, so
        // counting a sub-window equals rectangularizing just that window.
        const auto records = ingest_panel_file(cfg.input);
        const auto panel = rectangularize(records);
        const auto scheme =
            cfg.scheme_path.empty() ? default_scheme() : load_scheme_file(cfg.scheme_path);
        const auto grid = classify_panel(panel, scheme);
        for (int y = window.first; y < window.last; ++y)
            steps.push_back(count_transitions(grid, y, y + 1));
        direct = count_transitions_window(grid, window.first, window.last);
        if (cfg.strict) {
            for (const auto& tm : steps)
                if (!tm.undefined_columns.empty())
                    throw NumericError("matrix " + std::to_string(tm.origin_year) + "->" +
                                       std::to_string(tm.dest_year) +
                                       " has undefined origin states (strict mode)");
        }
    }

    const auto report = chapman_kolmogorov_check(steps, direct, cfg.tolerance);

    const fs::path out_dir(cfg.out);
    fs::create_directories(out_dir);
    const std::string stem =
        std::to_string(window.first) + "_" + std::to_string(window.last);
    write_text_file(out_dir / ("ck_product_" + stem + ".csv"),
                    matrix_csv_string(report.product));
    write_text_file(out_dir / ("ck_direct_" + stem + ".csv"),
                    matrix_csv_string(direct.probs));

    json j;
    j["tool"] = {{"name", "sizemarkov"}, {"version", kVersion}};
    j["command"] = "ck";
    j["origin_year"] = report.origin_year;
    j["dest_year"] = report.dest_year;
    j["tolerance"] = report.tolerance;
    j["max_abs_deviation"] = report.max_abs_deviation;
    j["worst_entry"] = {{"dest", report.worst_dest}, {"origin", report.worst_origin}};
    j["excluded_columns"] = report.excluded_columns;
    j["pass"] = report.pass;
    j["product_csv"] = "ck_product_" + stem + ".csv";
    j["direct_csv"] = "ck_direct_" + stem + ".csv";
    write_text_file(out_dir / ("ck_report_" + stem + ".json"), j.dump(2) + "\n");

    std::cout << "ck " << window.first << ":" << window.last
              << " max deviation " << csv::format_double(report.max_abs_deviation)
              << " (tolerance " << csv::format_double(report.tolerance) << ") -> "
              << (report.pass ? "PASS" : "FAIL") << "\n";
    return report.pass ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Markov transition dynamics for entity size panels"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    AnalyzeConfig analyze_cfg;
    auto* analyze = app.add_subcommand("analyze", "Estimate matrices, trend and entropy");
    analyze->add_option("--input", analyze_cfg.input, "Panel CSV (entity_id,year,size)")
        ->required();
    analyze->add_option("--out", analyze_cfg.out, "Output directory (or $SIZEMARKOV_OUT)");
    analyze->add_option("--years", analyze_cfg.years, "Year range A:B (default: input span)");
    analyze->add_option("--scheme", analyze_cfg.scheme_path, "Category scheme file");
    analyze->add_option("--format", analyze_cfg.format, "Matrix output format")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    analyze->add_option("--trend-weight", analyze_cfg.trend_weight,
                        "Marginal weighting for the trend sums")
        ->check(CLI::IsMember({"dest", "origin"}));
    analyze->add_flag("--trend-exclude-entry-exit", analyze_cfg.exclude_entry_exit,
                      "Mask state 0 (entry/exit) in the trend sums");
    analyze->add_flag("--strict", analyze_cfg.strict, "Treat undefined origin states as errors");

    SimulateConfig simulate_cfg;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic panel");
    simulate->add_option("--states", simulate_cfg.states, "Number of states incl. state 0");
    simulate->add_option("--matrix", simulate_cfg.matrix_path,
                         "Step matrix CSV (default: built-in demo chain)");
    simulate->add_option("--initial", simulate_cfg.initial_path,
                         "Initial marginal CSV 'state,probability' (default: uniform)");
    simulate->add_option("--entities", simulate_cfg.entities, "Number of entities");
    simulate->add_option("--years", simulate_cfg.years, "Year range A:B");
    simulate->add_option("--seed", simulate_cfg.seed, "PRNG seed");
    simulate->add_option("--scheme", simulate_cfg.scheme_path, "Category scheme file");
    simulate->add_option("--out", simulate_cfg.out, "Output directory (or $SIZEMARKOV_OUT)");

    VerifyConfig verify_cfg;
    auto* verify = app.add_subcommand("verify", "Check the bundled reference fixtures");
    verify->add_option("--fixtures", verify_cfg.fixtures, "Fixture directory");
    verify->add_option("--out", verify_cfg.out, "Directory for verify_report.json");
    verify->add_option("--tolerance-stochastic", verify_cfg.tolerances.stochasticity,
                       "Column sum tolerance");
    verify->add_option("--tolerance-entropy", verify_cfg.tolerances.entropy,
                       "Entropy recomputation tolerance");
    verify->add_option("--tolerance-ck", verify_cfg.tolerances.ck_product,
                       "Product vs published product tolerance");
    verify->add_option("--tolerance-direct", verify_cfg.tolerances.ck_direct,
                       "Published product vs window tolerance");
    verify->add_option("--tolerance-trend", verify_cfg.tolerances.trend,
                       "Trend |Q*R - L| tolerance");

    CkConfig ck_cfg;
    auto* ck = app.add_subcommand("ck", "Two-step consistency check");
    auto* ck_input = ck->add_option("--input", ck_cfg.input, "Panel CSV");
    auto* ck_fixtures =
        ck->add_option("--fixtures", ck_cfg.fixtures, "Use fixture matrices instead of a panel");
    ck_input->excludes(ck_fixtures);
    ck->add_option("--years", ck_cfg.years, "Window A:B (B - A >= 2)")->required();
    ck->add_option("--scheme", ck_cfg.scheme_path, "Category scheme file");
    ck->add_option("--tolerance-ck", ck_cfg.tolerance, "Max-abs deviation tolerance");
    ck->add_option("--out", ck_cfg.out, "Output directory (or $SIZEMARKOV_OUT)");
    ck->add_flag("--strict", ck_cfg.strict, "Treat undefined origin states as errors");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*analyze) return run_analyze(analyze_cfg);
        if (*simulate) return run_simulate(simulate_cfg);
        if (*verify) return run_verify(verify_cfg);
        if (*ck) {
            if (ck_cfg.input.empty() && ck_cfg.fixtures.empty())
                throw InputError("ck needs --input or --fixtures");
            return run_ck(ck_cfg);
        }
        return kExitInternal;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
