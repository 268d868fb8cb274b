#include <catch2/catch.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "sizemarkov/analytics.hpp"
#include "sizemarkov/classifier.hpp"
#include "sizemarkov/estimator.hpp"
#include "sizemarkov/matrix_io.hpp"
#include "sizemarkov/panel.hpp"
#include "sizemarkov/report_io.hpp"
#include "sizemarkov/simulator.hpp"

#include "helpers.hpp"

using namespace sizemarkov;
using testutil::TempDir;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
    const std::string command = std::string(SIZEMARKOV_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) result.output.append(buf, n);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

// A small panel with entries, exits and moves across three years.
std::string sample_panel_csv() {
    return "entity_id,year,size\n"
           "A,1998,15\nA,1999,25\nA,2000,30\n"
           "B,1998,60\nB,1999,70\n"
           "C,1999,5\nC,2000,8\n"
           "D,1998,300\nD,1999,320\nD,2000,310\n"
           "E,1999,1200\nE,2000,900\n";
}

}  // namespace

TEST_CASE("analyze produces matrices, series and a manifest") {
    TempDir dir("analyze");
    const auto input = dir.path() / "panel.csv";
    testutil::write_file(input, sample_panel_csv());
    const auto out = dir.path() / "out";

    const auto run = run_cli("analyze --input " + input.string() + " --out " + out.string());
    INFO(run.output);
    REQUIRE(run.exit_code == 0);

    // 3 years -> 2 matrix pairs.
    CHECK(std::filesystem::exists(out / "matrix_1998_1999.csv"));
    CHECK(std::filesystem::exists(out / "matrix_1999_2000.csv"));
    CHECK(std::filesystem::exists(out / "matrix_1998_1999.json"));
    CHECK_FALSE(std::filesystem::exists(out / "matrix_2000_2001.csv"));

    const auto trend = testutil::read_file(out / "trend.csv");
    CHECK(trend.substr(0, 15) == "end_year,L,R,Q\n");
    CHECK(std::count(trend.begin(), trend.end(), '\n') == 3);  // header + 2 rows

    const auto entropy = testutil::read_file(out / "entropy.csv");
    CHECK(entropy.substr(0, 19) == "category,1999,2000\n");
    // Two entrants in 1998 split between states 1 and 6 -> ln 2; nobody is
    // absent in 1999, so the 2000 column of category 0 is undefined (empty).
    CHECK(entropy.find("\n0,0.6931,\n") != std::string::npos);
    CHECK(std::count(entropy.begin(), entropy.end(), '\n') == 14);  // header + 13 rows

    CHECK(std::filesystem::exists(out / "entropy_long.csv"));
    CHECK(std::filesystem::exists(out / "group_entropy.csv"));
    const auto manifest = testutil::read_file(out / "run_manifest.json");
    CHECK(manifest.find("\"command\": \"analyze\"") != std::string::npos);
    CHECK(manifest.find("undefined") != std::string::npos);
}

TEST_CASE("analyze outputs equal direct library calls byte for byte") {
    TempDir dir("orchestration");
    const auto input = dir.path() / "panel.csv";
    testutil::write_file(input, sample_panel_csv());
    const auto out = dir.path() / "out";

    REQUIRE(run_cli("analyze --input " + input.string() + " --out " + out.string())
                .exit_code == 0);

    // Recompute through the library and render with the same writers.
    const auto records = ingest_panel_file(input);
    const auto panel = rectangularize(records);
    const auto grid = classify_panel(panel, default_scheme());
    const auto chain = estimate_first_order_chain(grid);

    std::vector<TrendPoint> trend;
    std::vector<EntropyTable> entropies;
    std::vector<GroupEntropy> groups;
    for (const auto& tm : chain) {
        trend.push_back(transition_trend(tm, empirical_marginal(grid, tm.dest_year)));
        entropies.push_back(entropy_table(tm));
        groups.push_back(group_entropy(entropies.back(), StateGrouping::standard(13)));
    }

    CHECK(testutil::read_file(out / "matrix_1998_1999.csv") ==
          matrix_csv_string(chain[0].probs));
    CHECK(testutil::read_file(out / "matrix_1999_2000.csv") ==
          matrix_csv_string(chain[1].probs));
    {
        std::ostringstream os;
        write_trend_csv(os, trend);
        CHECK(testutil::read_file(out / "trend.csv") == os.str());
    }
    {
        std::ostringstream os;
        write_entropy_csv(os, entropies);
        CHECK(testutil::read_file(out / "entropy.csv") == os.str());
    }
    {
        std::ostringstream os;
        write_group_entropy_csv(os, groups);
        CHECK(testutil::read_file(out / "group_entropy.csv") == os.str());
    }
}

TEST_CASE("repeated analyze runs are byte-identical") {
    TempDir dir("rerun");
    const auto input = dir.path() / "panel.csv";
    testutil::write_file(input, sample_panel_csv());
    const auto out1 = dir.path() / "out1";
    const auto out2 = dir.path() / "out2";

    REQUIRE(run_cli("analyze --input " + input.string() + " --out " + out1.string())
                .exit_code == 0);
    REQUIRE(run_cli("analyze --input " + input.string() + " --out " + out2.string())
                .exit_code == 0);

    for (const auto& entry : std::filesystem::directory_iterator(out1)) {
        const auto name = entry.path().filename();
        INFO(name.string());
        CHECK(testutil::read_file(entry.path()) == testutil::read_file(out2 / name));
    }
}

TEST_CASE("exit codes distinguish input, validation and numeric errors") {
    TempDir dir("exitcodes");
    const auto out = (dir.path() / "out").string();

    // Missing input file -> input error.
    CHECK(run_cli("analyze --input " + (dir.path() / "nope.csv").string() + " --out " + out)
              .exit_code == 2);

    // Malformed flag -> input error (CLI parse).
    CHECK(run_cli("analyze --out " + out).exit_code == 2);

    // Negative size -> validation error.
    const auto bad = dir.path() / "bad.csv";
    testutil::write_file(bad, "entity_id,year,size\nA,1998,-3\n");
    CHECK(run_cli("analyze --input " + bad.string() + " --out " + out).exit_code == 3);

    // Records outside an explicit year range -> validation error.
    const auto input = dir.path() / "panel.csv";
    testutil::write_file(input, sample_panel_csv());
    CHECK(run_cli("analyze --input " + input.string() + " --years 1998:1999 --out " + out)
              .exit_code == 3);

    // Undefined origin states under --strict -> numeric error.
    const auto strict_run =
        run_cli("analyze --input " + input.string() + " --strict --out " + out);
    CHECK(strict_run.exit_code == 4);
    CHECK(strict_run.output.find("undefined origin states") != std::string::npos);
}

TEST_CASE("simulate is deterministic and feeds analyze") {
    TempDir dir("simulate");
    const auto out1 = dir.path() / "s1";
    const auto out2 = dir.path() / "s2";
    const std::string args = "simulate --entities 500 --years 2000:2003 --seed 99 --out ";
    REQUIRE(run_cli(args + out1.string()).exit_code == 0);
    REQUIRE(run_cli(args + out2.string()).exit_code == 0);
    CHECK(testutil::read_file(out1 / "panel.csv") == testutil::read_file(out2 / "panel.csv"));

    // A different seed changes the panel.
    const auto out3 = dir.path() / "s3";
    REQUIRE(run_cli("simulate --entities 500 --years 2000:2003 --seed 100 --out " +
                    out3.string())
                .exit_code == 0);
    CHECK(testutil::read_file(out1 / "panel.csv") != testutil::read_file(out3 / "panel.csv"));

    const auto analyzed = dir.path() / "analyzed";
    REQUIRE(run_cli("analyze --input " + (out1 / "panel.csv").string() + " --out " +
                    analyzed.string())
                .exit_code == 0);
    CHECK(std::filesystem::exists(analyzed / "matrix_2000_2001.csv"));
    CHECK(std::filesystem::exists(analyzed / "matrix_2002_2003.csv"));
}

TEST_CASE("format and trend flags change the emitted artifacts") {
    TempDir dir("flags");
    const auto input = dir.path() / "panel.csv";
    testutil::write_file(input, sample_panel_csv());

    const auto csv_only = dir.path() / "csv_only";
    REQUIRE(run_cli("analyze --input " + input.string() + " --format csv --out " +
                    csv_only.string())
                .exit_code == 0);
    CHECK(std::filesystem::exists(csv_only / "matrix_1998_1999.csv"));
    CHECK_FALSE(std::filesystem::exists(csv_only / "matrix_1998_1999.json"));

    const auto json_only = dir.path() / "json_only";
    REQUIRE(run_cli("analyze --input " + input.string() + " --format json --out " +
                    json_only.string())
                .exit_code == 0);
    CHECK_FALSE(std::filesystem::exists(json_only / "matrix_1998_1999.csv"));
    CHECK(std::filesystem::exists(json_only / "matrix_1998_1999.json"));

    // The origin weighting and the entry/exit mask both change the trend.
    const auto base = dir.path() / "base";
    const auto origin = dir.path() / "origin";
    const auto masked = dir.path() / "masked";
    REQUIRE(run_cli("analyze --input " + input.string() + " --out " + base.string())
                .exit_code == 0);
    REQUIRE(run_cli("analyze --input " + input.string() + " --trend-weight origin --out " +
                    origin.string())
                .exit_code == 0);
    REQUIRE(run_cli("analyze --input " + input.string() +
                    " --trend-exclude-entry-exit --out " + masked.string())
                .exit_code == 0);
    const auto base_trend = testutil::read_file(base / "trend.csv");
    CHECK(base_trend != testutil::read_file(origin / "trend.csv"));
    CHECK(base_trend != testutil::read_file(masked / "trend.csv"));
    CHECK(testutil::read_file(base / "entropy.csv") ==
          testutil::read_file(origin / "entropy.csv"));
}

TEST_CASE("the environment variable supplies the default output directory") {
    TempDir dir("envout");
    const auto out = dir.path() / "from_env";
    const std::string command = "SIZEMARKOV_OUT=" + out.string() + " " + SIZEMARKOV_CLI_PATH +
                                " simulate --entities 50 --years 2000:2001 --seed 4 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[512];
    while (std::fread(buf, 1, sizeof(buf), pipe) > 0) (void)0;
    REQUIRE(WEXITSTATUS(pclose(pipe)) == 0);
    CHECK(std::filesystem::exists(out / "panel.csv"));
}

TEST_CASE("verify passes on the shipped fixtures and reports each check") {
    const auto run = run_cli("verify --fixtures " + std::string(SIZEMARKOV_FIXTURE_DIR));
    INFO(run.output);
    CHECK(run.exit_code == 0);
    CHECK(run.output.find("FAIL") == std::string::npos);
    CHECK(run.output.find("PASS stochasticity") != std::string::npos);
    CHECK(run.output.find("PASS entropy") != std::string::npos);
    CHECK(run.output.find("PASS ck_product") != std::string::npos);
    CHECK(run.output.find("PASS trend_arithmetic") != std::string::npos);
    CHECK(run.output.find("all checks passed") != std::string::npos);
}

TEST_CASE("verify fails with a named location on a perturbed fixture") {
    TempDir dir("verifycli");
    for (const auto& entry :
         std::filesystem::directory_iterator(SIZEMARKOV_FIXTURE_DIR))
        std::filesystem::copy(entry.path(), dir.path() / entry.path().filename());
    const auto victim = dir.path() / "first_order_2001_2002.csv";
    auto text = testutil::read_file(victim);
    const auto pos = text.find("0.6937");  // diagonal of column 4
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 6, "0.7437");
    testutil::write_file(victim, text);

    const auto run = run_cli("verify --fixtures " + dir.path().string());
    INFO(run.output);
    CHECK(run.exit_code == 5);
    CHECK(run.output.find("FAIL stochasticity [first_order_2001_2002.csv column 4]") !=
          std::string::npos);
    CHECK(run.output.find("warning:") != std::string::npos);

    // Missing fixture file -> hard input error.
    std::filesystem::remove(dir.path() / "trend_1999_2013.csv");
    CHECK(run_cli("verify --fixtures " + dir.path().string()).exit_code == 2);
}

TEST_CASE("ck reproduces the fixture window and reports deviations") {
    TempDir dir("ckfixtures");
    const auto out = dir.path() / "out";
    const auto run = run_cli("ck --fixtures " + std::string(SIZEMARKOV_FIXTURE_DIR) +
                             " --years 1998:2000 --out " + out.string());
    INFO(run.output);
    CHECK(run.exit_code == 0);
    CHECK(run.output.find("PASS") != std::string::npos);
    CHECK(std::filesystem::exists(out / "ck_product_1998_2000.csv"));
    CHECK(std::filesystem::exists(out / "ck_direct_1998_2000.csv"));
    const auto report = testutil::read_file(out / "ck_report_1998_2000.json");
    CHECK(report.find("\"pass\": true") != std::string::npos);

    // Other fixture windows have no direct matrix.
    CHECK(run_cli("ck --fixtures " + std::string(SIZEMARKOV_FIXTURE_DIR) +
                  " --years 1999:2001 --out " + out.string())
              .exit_code == 2);
}

TEST_CASE("ck runs end to end on a simulated panel") {
    TempDir dir("ckpanel");
    const auto sim_out = dir.path() / "sim";
    REQUIRE(run_cli("simulate --entities 4000 --years 2000:2004 --seed 7 --out " +
                    sim_out.string())
                .exit_code == 0);
    const auto out = dir.path() / "out";
    const auto run = run_cli("ck --input " + (sim_out / "panel.csv").string() +
                             " --years 2000:2002 --tolerance-ck 0.12 --out " + out.string());
    INFO(run.output);
    CHECK(run.exit_code == 0);

    // Windows are taken out of the panel's span; an interior one works too.
    const auto interior = run_cli("ck --input " + (sim_out / "panel.csv").string() +
                                  " --years 2001:2003 --tolerance-ck 0.12 --out " +
                                  out.string());
    INFO(interior.output);
    CHECK(interior.exit_code == 0);
    CHECK(std::filesystem::exists(out / "ck_product_2001_2003.csv"));

    // A window shorter than 3 years is rejected, as is one outside the span.
    CHECK(run_cli("ck --input " + (sim_out / "panel.csv").string() +
                  " --years 2000:2001 --out " + out.string())
              .exit_code == 3);
    CHECK(run_cli("ck --input " + (sim_out / "panel.csv").string() +
                  " --years 2003:2006 --out " + out.string())
              .exit_code == 3);
}

TEST_CASE("simulate accepts a step matrix and an initial marginal from files") {
    TempDir dir("simfiles");
    // Drive the simulator with one of the bundled reference matrices.
    const auto matrix =
        std::filesystem::path(SIZEMARKOV_FIXTURE_DIR) / "first_order_1998_1999.csv";
    const auto initial = dir.path() / "initial.csv";
    testutil::write_file(initial,
                         "state,probability\n0,0.2\n1,0.2\n2,0.2\n3,0.2\n4,0.2\n");
    const auto out = dir.path() / "out";
    const auto run = run_cli("simulate --matrix " + matrix.string() + " --initial " +
                             initial.string() +
                             " --entities 400 --years 2000:2004 --seed 5 --out " +
                             out.string());
    INFO(run.output);
    REQUIRE(run.exit_code == 0);

    // The panel analyzes cleanly end to end.
    const auto analyzed = dir.path() / "analyzed";
    CHECK(run_cli("analyze --input " + (out / "panel.csv").string() + " --out " +
                  analyzed.string())
              .exit_code == 0);

    // An initial marginal that does not sum to 1 is rejected.
    testutil::write_file(initial, "state,probability\n0,0.5\n1,0.6\n");
    CHECK(run_cli("simulate --matrix " + matrix.string() + " --initial " + initial.string() +
                  " --entities 10 --years 2000:2001 --seed 5 --out " + out.string())
              .exit_code == 3);
}

TEST_CASE("analyze honours a custom scheme file") {
    TempDir dir("scheme");
    const auto input = dir.path() / "panel.csv";
    testutil::write_file(input, sample_panel_csv());
    const auto scheme = dir.path() / "scheme.conf";
    testutil::write_file(scheme, "# coarse bins\nboundaries = [0, 100, 1000]\n");
    const auto out = dir.path() / "out";

    const auto run = run_cli("analyze --input " + input.string() + " --scheme " +
                             scheme.string() + " --out " + out.string());
    INFO(run.output);
    REQUIRE(run.exit_code == 0);

    // 4 states -> 4 entropy rows; too few states for the size groups.
    const auto entropy = testutil::read_file(out / "entropy.csv");
    CHECK(std::count(entropy.begin(), entropy.end(), '\n') == 5);  // header + 4 rows
    CHECK_FALSE(std::filesystem::exists(out / "group_entropy.csv"));
    const auto manifest = testutil::read_file(out / "run_manifest.json");
    CHECK(manifest.find("fewer than 8 states") != std::string::npos);
    CHECK(manifest.find("\"n_states\": 4") != std::string::npos);
}
