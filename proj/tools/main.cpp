#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "thermoeq/analysis.hpp"
#include "thermoeq/certify.hpp"
#include "thermoeq/config.hpp"
#include "thermoeq/errors.hpp"
#include "thermoeq/integrator.hpp"
#include "thermoeq/lyapunov.hpp"
#include "thermoeq/manifest.hpp"
#include "thermoeq/records.hpp"
#include "thermoeq/study.hpp"

namespace {

using namespace thermoeq;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitPhysics = 1;  // a physics check came out false
constexpr int kExitUsage = 2;    // bad invocation or bad config

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 20260801ULL;
    std::string out_dir = ".";
    int workers = 1;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "path to the run configuration")
        ->required();
    sub->add_option("--seed", args.seed, "base seed; every derived stream hangs off it");
    sub->add_option("--out", args.out_dir, "directory for artifacts (created if absent)");
    sub->add_option("--workers", args.workers, "worker threads for multi-run commands")
        ->check(CLI::PositiveNumber);
}

std::string out_path(const CommonArgs& args, const std::string& name) {
    return (std::filesystem::path(args.out_dir) / name).string();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    if (!out) throw IoError("write failure: " + path);
}

/// run one trajectory per the config; shared by simulate and proposition
std::vector<ObservableRecord> run_configured_trajectory(const RunConfig& cfg,
                                                        std::uint64_t seed) {
    PhasePoint x = initialize(seed, cfg.system, cfg.forces, cfg.thermostat, cfg.integrator);
    Simulator sim(cfg.system, cfg.forces, cfg.thermostat, cfg.integrator);
    return sim.run(x, cfg.steps, cfg.record_every);
}

int cmd_simulate(const CommonArgs& args) {
    const RunConfig cfg = parse_config(args.config_path);
    std::filesystem::create_directories(args.out_dir);
    RunManifest manifest = make_manifest(cfg, {args.seed});

    const auto recs = run_configured_trajectory(cfg, args.seed);

    const std::string records_path = out_path(args, "records.csv");
    const std::string manifest_path = out_path(args, "manifest.json");
    write_records_csv(records_path, recs);
    manifest.outputs = {records_path, manifest_path};
    manifest.finished_at = iso8601_utc_now();
    save_manifest(manifest, manifest_path);

    std::printf("simulate: %ld steps of %s dynamics, %zu records -> %s\n", cfg.steps,
                to_string(cfg.thermostat.kind).c_str(), recs.size(), records_path.c_str());
    return kExitOk;
}

int cmd_equivalence(const CommonArgs& args) {
    const RunConfig cfg = parse_config(args.config_path);
    std::filesystem::create_directories(args.out_dir);
    RunManifest manifest = make_manifest(cfg, {args.seed});

    const EquivalenceStudyConfig sc = study_from_run_config(cfg);
    const EquivalenceReport report =
        run_equivalence_study(sc, args.seed, args.workers, args.out_dir);

    manifest.outputs.push_back(out_path(args, "equivalence_report.json"));
    for (const SizeRow& row : report.rows)
        manifest.outputs.push_back(out_path(args, "size_" + std::to_string(row.n) + ".json"));
    const std::string manifest_path = out_path(args, "manifest.json");
    manifest.outputs.push_back(manifest_path);
    manifest.finished_at = iso8601_utc_now();
    save_manifest(manifest, manifest_path);

    std::printf("%6s %14s %14s %14s %14s\n", "N", "dJ", "sigma(dJ)", "dalpha",
                "sigma(dalpha)");
    for (const SizeRow& row : report.rows)
        std::printf("%6d %14.6e %14.6e %14.6e %14.6e\n", row.n, row.delta_j(),
                    row.delta_j_sigma(), row.delta_alpha(), row.delta_alpha_sigma());
    return kExitOk;
}

json proposition_report_to_json_obj(const PropositionReport& rep) {
    json identity = json::array();
    for (int i = 0; i < 3; ++i) {
        const auto& b = rep.identity7_values[static_cast<std::size_t>(i)];
        identity.push_back({{"mean", b.mean},
                            {"std_error", b.std_error},
                            {"decay", rep.identity7_decay[static_cast<std::size_t>(i)]}});
    }
    return {{"bound5_rhs", rep.bound5_rhs},
            {"bound6_rhs", rep.bound6_rhs},
            {"tol_energy", rep.tol_energy},
            {"tol_p2", rep.tol_p2},
            {"first_confined_index", rep.first_confined_index},
            {"first_confined_time", rep.first_confined_time},
            {"descent_margin", rep.descent_margin},
            {"descent_verified", rep.descent_verified},
            {"post_transient_max_H_like", rep.post_transient_max_H_like},
            {"post_transient_max_p2", rep.post_transient_max_p2},
            {"energy_bound_holds", rep.energy_bound_holds},
            {"p2_bound_holds", rep.p2_bound_holds},
            {"identity7", identity}};
}

int cmd_proposition(const CommonArgs& args) {
    const RunConfig cfg = parse_config(args.config_path);
    if (cfg.thermostat.kind != ThermostatKind::ConstantAlpha) {
        std::fprintf(stderr,
                     "proposition: the confinement certificate covers the constant-friction "
                     "flow only (hypothesis: alpha, m are constants > 0); got kind = %s\n",
                     to_string(cfg.thermostat.kind).c_str());
        return kExitUsage;
    }
    std::filesystem::create_directories(args.out_dir);
    RunManifest manifest = make_manifest(cfg, {args.seed});

    const auto recs = run_configured_trajectory(cfg, args.seed);

    bool passed = false;
    json body;
    try {
        const PropositionReport rep =
            check_proposition(recs, cfg.system, cfg.forces, cfg.thermostat);
        passed = rep.energy_bound_holds && rep.p2_bound_holds && rep.descent_verified;
        body = proposition_report_to_json_obj(rep);
        std::printf("proposition: H-like bound %s (max %.6g vs %.6g), p^2 bound %s "
                    "(max %.6g vs %.6g), descent %s\n",
                    rep.energy_bound_holds ? "holds" : "VIOLATED",
                    rep.post_transient_max_H_like, rep.bound5_rhs + rep.tol_energy,
                    rep.p2_bound_holds ? "holds" : "VIOLATED", rep.post_transient_max_p2,
                    rep.bound6_rhs + rep.tol_p2, rep.descent_verified ? "verified" : "VIOLATED");
    } catch (const TransientNotEndedError& e) {
        passed = false;
        body = {{"error", e.what()}};
        std::printf("proposition: %s\n", e.what());
    }
    body["passed"] = passed;
    body["artifact_version"] = kArtifactVersion;

    const std::string report_path = out_path(args, "proposition_report.json");
    const std::string manifest_path = out_path(args, "manifest.json");
    write_text_file(report_path, body.dump(2) + "\n");
    manifest.outputs = {report_path, manifest_path};
    manifest.finished_at = iso8601_utc_now();
    save_manifest(manifest, manifest_path);
    return passed ? kExitOk : kExitPhysics;
}

int cmd_lyapunov(const CommonArgs& args) {
    const RunConfig cfg = parse_config(args.config_path);
    std::filesystem::create_directories(args.out_dir);
    RunManifest manifest = make_manifest(cfg, {args.seed});

    PhasePoint x0 = initialize(args.seed, cfg.system, cfg.forces, cfg.thermostat,
                               cfg.integrator);
    const LyapunovReport rep = lyapunov_spectrum(cfg.system, cfg.forces, cfg.thermostat,
                                                 cfg.integrator, x0, cfg.steps);

    json body{{"artifact_version", kArtifactVersion},
              {"exponents", rep.exponents},
              {"sum_exponents", rep.sum_exponents},
              {"contraction_average", rep.contraction_average},
              {"pairing_residuals", rep.pairing_residuals},
              {"center_by_exclusion", rep.center_by_exclusion},
              {"spread_by_exclusion", rep.spread_by_exclusion},
              {"best_exclusion", rep.best_exclusion},
              {"pairing_center", rep.pairing_center}};
    const std::string report_path = out_path(args, "lyapunov_report.json");
    const std::string manifest_path = out_path(args, "manifest.json");
    write_text_file(report_path, body.dump(2) + "\n");
    manifest.outputs = {report_path, manifest_path};
    manifest.finished_at = iso8601_utc_now();
    save_manifest(manifest, manifest_path);

    std::printf("lyapunov: %zu exponents, sum %.6g, contraction %.6g, pairing center %.6g "
                "(excluding %d)\n",
                rep.exponents.size(), rep.sum_exponents, rep.contraction_average,
                rep.pairing_center, rep.best_exclusion);
    return kExitOk;
}

int cmd_certify(const CommonArgs& args) {
    const RunConfig cfg = parse_config(args.config_path);
    std::filesystem::create_directories(args.out_dir);
    RunManifest manifest = make_manifest(cfg, {args.seed});

    const CertificationReport report = run_certification_suite(cfg, args.seed);
    for (const CheckResult& c : report.checks)
        std::printf("[%s] %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                    c.detail.c_str());

    const std::string report_path = out_path(args, "certification_report.json");
    const std::string manifest_path = out_path(args, "manifest.json");
    write_text_file(report_path, certification_report_to_json(report));
    manifest.outputs = {report_path, manifest_path};
    manifest.finished_at = iso8601_utc_now();
    save_manifest(manifest, manifest_path);

    return report.all_passed() ? kExitOk : kExitPhysics;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"driven particle dynamics with kinetic- and energy-constraint thermostats"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* simulate =
        app.add_subcommand("simulate", "integrate one trajectory and write its records");
    CLI::App* equivalence = app.add_subcommand(
        "equivalence", "size ladder comparing the two thermostats at matched state points");
    CLI::App* proposition = app.add_subcommand(
        "proposition", "confinement certificate for the constant-friction flow");
    CLI::App* lyapunov =
        app.add_subcommand("lyapunov", "tangent-space spectrum with pairing diagnostics");
    CLI::App* certify =
        app.add_subcommand("certify", "battery of physics checks; nonzero exit on failure");
    for (CLI::App* sub : {simulate, equivalence, proposition, lyapunov, certify})
        add_common(sub, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(args);
        if (equivalence->parsed()) return cmd_equivalence(args);
        if (proposition->parsed()) return cmd_proposition(args);
        if (lyapunov->parsed()) return cmd_lyapunov(args);
        return cmd_certify(args);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run failed: %s\n", e.what());
        return kExitPhysics;
    }
}
