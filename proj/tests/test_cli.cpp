// exercises the installed command-line surface end to end: exit codes,
// artifact layout, and byte-level determinism of reruns
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

#include "thermoeq/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() { return THERMOEQ_CLI_PATH; }

struct Scratch {
    fs::path dir;
    Scratch() {
        static int counter = 0;
        dir = fs::temp_directory_path() /
              ("thermoeq_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    fs::path operator/(const std::string& leaf) const { return dir / leaf; }
};

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

RunResult run_cli(const Scratch& scratch, const std::string& args) {
    const fs::path out_file = scratch / "stdout.txt";
    const fs::path err_file = scratch / "stderr.txt";
    const std::string cmd = "'" + cli_path() + "' " + args + " > '" + out_file.string() +
                            "' 2> '" + err_file.string() + "'";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

const char* kBaseConfig =
    "[system]\n"
    "N = 16\n"
    "[integrator]\n"
    "steps = 2000\n";

const char* kPropositionConfig =
    "[system]\n"
    "u = 0\n"
    "v = 1\n"
    "N = 1\n"
    "box = 50\n"
    "[forces]\n"
    "eps = 0\n"
    "rc = 1\n"
    "xi = 0.5\n"
    "[thermostat]\n"
    "kind = constant_alpha\n"
    "alpha_const = 0.5\n"
    "[integrator]\n"
    "dt = 0.001\n"
    "steps = 40000\n"
    "record_every = 10\n"
    "[study]\n"
    "h0 = 1.5\n";

const char* kStudyConfig =
    "[system]\n"
    "N = 16\n"
    "[integrator]\n"
    "dt = 0.001\n"
    "steps = 3000\n"
    "record_every = 10\n"
    "[study]\n"
    "sizes = 4, 6, 8\n"
    "density = 0.4\n"
    "h0 = 1.5\n"
    "seeds = 2\n"
    "transient_fraction = 0.2\n";

const char* kLyapunovConfig =
    "[system]\n"
    "N = 2\n"
    "[forces]\n"
    "xi = 2.0, 0.0\n"
    "[thermostat]\n"
    "kind = isoenergetic\n"
    "[integrator]\n"
    "dt = 0.001\n"
    "steps = 5000\n";

json manifest_at(const fs::path& dir) {
    const fs::path p = dir / "manifest.json";
    REQUIRE(fs::exists(p));
    return json::parse(slurp(p));
}

} // namespace

TEST_CASE("bad invocations exit 2 without touching the filesystem") {
    Scratch scratch;

    CHECK(run_cli(scratch, "").exit_code == 2);
    CHECK(run_cli(scratch, "frobnicate").exit_code == 2);
    CHECK(run_cli(scratch, "simulate").exit_code == 2);

    const fs::path cfg = scratch / "base.ini";
    spit(cfg, kBaseConfig);
    CHECK(run_cli(scratch, "simulate --config '" + cfg.string() + "' --workers 0").exit_code == 2);

    RunResult missing = run_cli(scratch, "simulate --config '" + (scratch / "nope.ini").string() + "'");
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("nope.ini") != std::string::npos);
}

TEST_CASE("help requests exit 0 and list every subcommand") {
    Scratch scratch;
    RunResult help = run_cli(scratch, "--help");
    CHECK(help.exit_code == 0);
    for (const char* sub : {"simulate", "equivalence", "proposition", "lyapunov", "certify"})
        CHECK(help.out.find(sub) != std::string::npos);
    CHECK(run_cli(scratch, "simulate --help").exit_code == 0);
}

TEST_CASE("config mistakes surface with their line number and exit 2") {
    Scratch scratch;
    const fs::path cfg = scratch / "typo.ini";
    spit(cfg, "[system]\nN = 16\ntemprature = 3\n");
    RunResult r = run_cli(scratch, "simulate --config '" + cfg.string() + "'");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("temprature") != std::string::npos);
    CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("simulate writes records and a manifest; reruns are byte-identical") {
    Scratch scratch;
    const fs::path cfg = scratch / "base.ini";
    spit(cfg, kBaseConfig);
    const fs::path out1 = scratch / "run1";
    const fs::path out2 = scratch / "run2";

    RunResult r1 = run_cli(scratch, "simulate --config '" + cfg.string() +
                                        "' --seed 7 --out '" + out1.string() + "'");
    CHECK(r1.exit_code == 0);
    RunResult r2 = run_cli(scratch, "simulate --config '" + cfg.string() +
                                        "' --seed 7 --out '" + out2.string() + "'");
    CHECK(r2.exit_code == 0);

    const std::string csv1 = slurp(out1 / "records.csv");
    REQUIRE(!csv1.empty());
    CHECK(csv1.substr(0, csv1.find('\n')) == "t,K,H,alpha,J,V,heat_rate,stat_residual");
    // header plus the initial state plus one row per recorded step
    const long rows = std::count(csv1.begin(), csv1.end(), '\n');
    CHECK(rows == 2000 / 10 + 2);
    CHECK(csv1 == slurp(out2 / "records.csv"));

    json m1 = manifest_at(out1);
    json m2 = manifest_at(out2);
    CHECK(m1["artifact_version"] == "thermoeq-1");
    CHECK(m1["seeds"] == json::array({7}));
    CHECK(m1["config_hash"] == config_digest(thermoeq::parse_config(cfg.string())));
    // everything except wall-clock timestamps and the output paths must agree
    for (const char* key : {"artifact_version", "config_hash", "seeds"})
        CHECK(m1[key] == m2[key]);
    CHECK(m1["started_at"].get<std::string>().size() == 20);

    // a different seed must change the trajectory
    const fs::path out3 = scratch / "run3";
    REQUIRE(run_cli(scratch, "simulate --config '" + cfg.string() + "' --seed 8 --out '" +
                                 out3.string() + "'")
                .exit_code == 0);
    CHECK(slurp(out3 / "records.csv") != csv1);
}

TEST_CASE("proposition refuses thermostats outside its hypothesis") {
    Scratch scratch;
    const fs::path cfg = scratch / "ik.ini";
    std::string text = kPropositionConfig;
    const auto at = text.find("constant_alpha");
    text.replace(at, std::string("constant_alpha").size(), "isokinetic");
    spit(cfg, text);

    const fs::path out = scratch / "prop";
    RunResult r = run_cli(scratch, "proposition --config '" + cfg.string() + "' --out '" +
                                       out.string() + "'");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("alpha, m are constants > 0") != std::string::npos);
    CHECK(!fs::exists(out / "proposition_report.json"));
}

TEST_CASE("proposition certifies a confined constant-friction flow") {
    Scratch scratch;
    const fs::path cfg = scratch / "prop.ini";
    spit(cfg, kPropositionConfig);
    const fs::path out = scratch / "prop";

    // seed 1 draws a momentum opposed to the drive, which enters the bound in
    // finite time; the certificate must come back clean
    RunResult r = run_cli(scratch, "proposition --config '" + cfg.string() +
                                       "' --seed 1 --out '" + out.string() + "'");
    CHECK(r.exit_code == 0);
    json rep = json::parse(slurp(out / "proposition_report.json"));
    CHECK(rep["passed"] == true);
    CHECK(rep["energy_bound_holds"] == true);
    CHECK(rep["p2_bound_holds"] == true);
    CHECK(rep["descent_verified"] == true);
    CHECK(rep["bound6_rhs"] == 1.0);
    CHECK(manifest_at(out)["artifact_version"] == "thermoeq-1");
}

TEST_CASE("proposition reports a failed physics check with exit 1") {
    Scratch scratch;
    const fs::path cfg = scratch / "prop.ini";
    spit(cfg, kPropositionConfig);
    const fs::path out = scratch / "prop";

    // seed 2 draws a momentum along the drive; p^2 then approaches the bound
    // from above and never gets under it at finite time, an honest failure
    RunResult r = run_cli(scratch, "proposition --config '" + cfg.string() +
                                       "' --seed 2 --out '" + out.string() + "'");
    CHECK(r.exit_code == 1);
    json rep = json::parse(slurp(out / "proposition_report.json"));
    CHECK(rep["passed"] == false);
    CHECK(rep["p2_bound_holds"] == false);

    // same draw with a horizon shorter than the entry time: the run never
    // reaches the confined region at all and says so
    const fs::path cfg2 = scratch / "prop_short.ini";
    std::string text = kPropositionConfig;
    const auto at = text.find("steps = 40000");
    text.replace(at, std::string("steps = 40000").size(), "steps = 1200");
    spit(cfg2, text);
    const fs::path out2 = scratch / "prop_short";
    RunResult r2 = run_cli(scratch, "proposition --config '" + cfg2.string() +
                                        "' --seed 2 --out '" + out2.string() + "'");
    CHECK(r2.exit_code == 1);
    json rep2 = json::parse(slurp(out2 / "proposition_report.json"));
    CHECK(rep2["passed"] == false);
    CHECK(rep2.contains("error"));
}

TEST_CASE("equivalence writes one file per ladder rung plus a deterministic report") {
    Scratch scratch;
    const fs::path cfg = scratch / "study.ini";
    spit(cfg, kStudyConfig);
    const fs::path out1 = scratch / "eq1";
    const fs::path out2 = scratch / "eq2";

    RunResult r1 = run_cli(scratch, "equivalence --config '" + cfg.string() +
                                        "' --seed 11 --out '" + out1.string() + "'");
    CHECK(r1.exit_code == 0);
    for (const char* leaf : {"equivalence_report.json", "size_4.json", "size_6.json",
                             "size_8.json", "manifest.json"})
        CHECK(fs::exists(out1 / leaf));

    RunResult r2 = run_cli(scratch, "equivalence --config '" + cfg.string() +
                                        "' --seed 11 --out '" + out2.string() +
                                        "' --workers 2");
    CHECK(r2.exit_code == 0);
    CHECK(slurp(out1 / "equivalence_report.json") == slurp(out2 / "equivalence_report.json"));

    json rep = json::parse(slurp(out1 / "equivalence_report.json"));
    REQUIRE(rep["rows"].size() == 3);
    CHECK(rep["rows"][0]["n"] == 4);
    CHECK(rep["rows"][2]["n"] == 8);
}

TEST_CASE("lyapunov writes the full spectrum with pairing diagnostics") {
    Scratch scratch;
    const fs::path cfg = scratch / "lyap.ini";
    spit(cfg, kLyapunovConfig);
    const fs::path out = scratch / "lyap";

    RunResult r = run_cli(scratch, "lyapunov --config '" + cfg.string() + "' --seed 3 --out '" +
                                       out.string() + "'");
    CHECK(r.exit_code == 0);
    json rep = json::parse(slurp(out / "lyapunov_report.json"));
    CHECK(rep["exponents"].size() == 8); // 2 particles x 2 dims, q and p each
    CHECK(rep.contains("sum_exponents"));
    CHECK(rep.contains("contraction_average"));
    CHECK(rep.contains("pairing_center"));
}

TEST_CASE("certify runs the whole battery and exits 0 when everything passes") {
    Scratch scratch;
    const fs::path cfg = scratch / "base.ini";
    spit(cfg, kBaseConfig);
    const fs::path out = scratch / "cert";

    RunResult r = run_cli(scratch, "certify --config '" + cfg.string() + "' --out '" +
                                       out.string() + "'");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("[FAIL]") == std::string::npos);
    // every check reports exactly one verdict line
    long passes = 0;
    for (std::size_t pos = 0; (pos = r.out.find("[PASS]", pos)) != std::string::npos; ++pos)
        ++passes;
    CHECK(passes == 8);
    json rep = json::parse(slurp(out / "certification_report.json"));
    CHECK(rep["all_passed"] == true);
    CHECK(rep["checks"].size() == 8);
}
