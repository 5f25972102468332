#include <doctest.h>

#include "mhrn/diagnostics.hpp"
#include "mhrn/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace mhrn;
namespace fs = std::filesystem;

namespace {

// binary under test, injected by the build
const char* cli_path() { return MHRN_CLI_PATH; }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(cli_path()) + " " + args + " >cli_scratch/log.txt 2>&1";
    const int st = std::system(cmd.c_str());
    REQUIRE(st != -1);
    REQUIRE(WIFEXITED(st));
    return WEXITSTATUS(st);
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

struct Scratch {
    Scratch() {
        fs::remove_all("cli_scratch");
        fs::create_directories("cli_scratch");
    }
};

// flags shared by the fast run scenarios
const char* kSmallRun = "--rstar-min -40 --rstar-max 40 --n-points 257 --center 5 --width 6 "
                        "--t-final 2";

} // namespace

TEST_CASE("cli: run subcommand output contract") {
    Scratch sc;

    // t_final = 0 still emits the header and the initial row
    CHECK(run_cli("run-mode --t-final 0 --csv-path cli_scratch/t0.csv") == 0);
    const std::string t0 = slurp("cli_scratch/t0.csv");
    CHECK(t0.rfind("t,E,E_C,E_l,E_gamma,constraint_l2,linf_phi_loc,linf_A_loc,h4_phi_loc,h4_A_loc\n",
                   0) == 0);
    CHECK(std::count(t0.begin(), t0.end(), '\n') == 2);

    // overwrite is refused without --force
    CHECK(run_cli("run-mode --t-final 0 --csv-path cli_scratch/t0.csv") == 2);
    CHECK(run_cli("run-mode --t-final 0 --csv-path cli_scratch/t0.csv --force") == 0);

    // the CSV a run writes parses back to the same numbers
    CHECK(run_cli(std::string("run-mode ") + kSmallRun + " --csv-path cli_scratch/rt.csv") == 0);
    const std::string text = slurp("cli_scratch/rt.csv");
    const std::vector<EnergyReport> rows = parse_reports_csv(text);
    CHECK(rows.size() == 3);
    CHECK(format_reports_csv(rows) == text);

    // flags override file keys only when given
    spit("cli_scratch/five.cfg", "t_final = 5\nreport_cadence = 1\n");
    CHECK(run_cli("run-mode cli_scratch/five.cfg --t-final 0 --csv-path cli_scratch/ov.csv") == 0);
    const std::string ov = slurp("cli_scratch/ov.csv");
    CHECK(std::count(ov.begin(), ov.end(), '\n') == 2);

    // run-coupled writes the same schema
    CHECK(run_cli("run-coupled --rstar-min -30 --rstar-max 30 --n-points 129 --n-theta 8 "
                  "--amplitude 0.01 --t-final 1 --csv-path cli_scratch/cp.csv") == 0);
    CHECK(parse_reports_csv(slurp("cli_scratch/cp.csv")).size() == 2);
}

TEST_CASE("cli: exit codes for config errors and numerical faults") {
    Scratch sc;

    spit("cli_scratch/bad.cfg", "charge = 1.5\n");
    CHECK(run_cli("run-mode cli_scratch/bad.cfg") == 2);
    spit("cli_scratch/unk.cfg", "no_such_key = 1\n");
    CHECK(run_cli("run-mode cli_scratch/unk.cfg") == 2);
    CHECK(run_cli("run-mode --no-such-flag") == 2);
    CHECK(run_cli("") == 2);         // a subcommand is required
    CHECK(run_cli("bogus") == 2);    // unknown subcommand
    CHECK(run_cli("run-mode cli_scratch/missing.cfg") == 2);

    // blowup aborts with the numerical-fault code
    CHECK(run_cli("run-mode --amplitude 1e308 --rstar-min -40 --rstar-max 40 --n-points 129 "
                  "--t-final 1 --csv-path cli_scratch/nan.csv") == 3);
}

TEST_CASE("cli: audit battery, stored histories, fault injection") {
    Scratch sc;

    // the shipped defaults pass the whole battery
    CHECK(run_cli("audit --json-path cli_scratch/audit.json") == 0);
    const nlohmann::json parsed = nlohmann::json::parse(slurp("cli_scratch/audit.json"));
    REQUIRE(parsed.is_array());
    REQUIRE(parsed.size() == 7);
    const char* ids[] = {"energy_conservation", "hardy",       "holder_interpolation",
                         "gronwall_envelope",   "conformal_growth", "linf_growth",
                         "el_vs_ec"};
    for (size_t i = 0; i < 7; ++i) {
        CHECK(parsed[i]["id"] == ids[i]);
        CHECK(parsed[i]["pass"] == true);
    }

    // store the default run, audit the stored series, inject a 10% jump
    CHECK(run_cli("run-mode --csv-path cli_scratch/hist.csv") == 0);
    CHECK(run_cli("audit --history cli_scratch/hist.csv --json-path cli_scratch/stored.json") ==
          0);

    std::vector<EnergyReport> rows = parse_reports_csv(slurp("cli_scratch/hist.csv"));
    REQUIRE(rows.size() > 10);
    rows[rows.size() / 2].E *= 1.1;
    spit("cli_scratch/jump.csv", format_reports_csv(rows));
    CHECK(run_cli("audit --history cli_scratch/jump.csv --json-path cli_scratch/jump.json") == 1);
    const nlohmann::json jj = nlohmann::json::parse(slurp("cli_scratch/jump.json"));
    CHECK(jj[0]["id"] == "energy_conservation");
    CHECK(jj[0]["pass"] == false);

    // malformed stored history is a config error
    spit("cli_scratch/mangled.csv", "t,E\n0,1\n");
    CHECK(run_cli("audit --history cli_scratch/mangled.csv --json-path cli_scratch/x.json") == 2);
}

TEST_CASE("cli: converge and coulomb-check") {
    Scratch sc;

    CHECK(run_cli("converge --rstar-min -50 --rstar-max 50 --n-points 401 --center 0 --width 6 "
                  "--cfl 0.2 --t-final 2 --report-cadence 1 --snapshot-cadence 0.25 "
                  "--json-path cli_scratch/conv.json") == 0);
    const nlohmann::json cj = nlohmann::json::parse(slurp("cli_scratch/conv.json"));
    REQUIRE(cj.size() == 1);
    CHECK(cj[0]["id"] == "convergence_study");
    CHECK(std::abs(cj[0]["constants"]["p"].get<double>() - 4.0) < 0.5);

    CHECK(run_cli("coulomb-check --n-points 257 --n-theta 8 --t-final 5") == 0);
    const std::string log = slurp("cli_scratch/log.txt");
    CHECK(log.find("[PASS]") != std::string::npos);
    CHECK(log.find("max |Phi_0 - q_A|") != std::string::npos);

    // an unreachable tolerance flips the exit code
    CHECK(run_cli("coulomb-check --n-points 257 --n-theta 8 --t-final 5 --tolerance 0") == 1);
}

TEST_CASE("cli: determinism and output-directory resolution") {
    Scratch sc;

    const std::string run = std::string("run-mode ") + kSmallRun;
    CHECK(run_cli(run + " --csv-path cli_scratch/a.csv --threads 1") == 0);
    CHECK(run_cli(run + " --csv-path cli_scratch/b.csv --threads 1") == 0);
    CHECK(run_cli(run + " --csv-path cli_scratch/c.csv --threads 3") == 0);
    const std::string a = slurp("cli_scratch/a.csv");
    CHECK(a == slurp("cli_scratch/b.csv"));
    CHECK(a == slurp("cli_scratch/c.csv"));

    // relative outputs land inside MHRN_OUTPUT_DIR
    fs::create_directories("cli_scratch/outdir");
    setenv("MHRN_OUTPUT_DIR", "cli_scratch/outdir", 1);
    CHECK(run_cli("run-mode --t-final 0") == 0);
    CHECK(run_cli("run-mode --t-final 0 --csv-path within.csv") == 0);
    unsetenv("MHRN_OUTPUT_DIR");
    CHECK(fs::exists("cli_scratch/outdir/run_mode.csv"));
    CHECK(fs::exists("cli_scratch/outdir/within.csv"));

    // absolute paths ignore the directory override
    setenv("MHRN_OUTPUT_DIR", "cli_scratch/outdir", 1);
    const fs::path abs_target = fs::absolute("cli_scratch/abs.csv");
    CHECK(run_cli("run-mode --t-final 0 --csv-path " + abs_target.string()) == 0);
    unsetenv("MHRN_OUTPUT_DIR");
    CHECK(fs::exists(abs_target));
}
