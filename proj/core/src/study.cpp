#include "thermoeq/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "thermoeq/analysis.hpp"
#include "thermoeq/errors.hpp"
#include "thermoeq/integrator.hpp"
#include "thermoeq/manifest.hpp"
#include "thermoeq/rng.hpp"

namespace thermoeq {

using nlohmann::json;

namespace {

struct SeedObservation {
    BlockStats kinetic, j, potential, alpha;
};

/// run the body for r = 0..r_count-1, distributed over a small thread pool;
/// results must go into per-r slots so aggregation ignores scheduling order
template <typename Fn>
void for_each_seed(int r_count, int workers, Fn&& body) {
    const int w = std::max(1, std::min(workers, r_count));
    if (w == 1) {
        for (int r = 0; r < r_count; ++r) body(r);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(r_count));
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(w));
    for (int t = 0; t < w; ++t)
        pool.emplace_back([&] {
            for (int r = next.fetch_add(1); r < r_count; r = next.fetch_add(1)) {
                try {
                    body(r);
                } catch (...) {
                    errors[static_cast<std::size_t>(r)] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

SeedObservation observe_run(const EquivalenceStudyConfig& sc, const SystemSpec& sys,
                            ThermostatKind kind, double target, std::uint64_t seed) {
    ThermostatMode mode;
    mode.kind = kind;
    IntegratorConfig icfg = sc.integrator;
    icfg.constraint_target = target;
    PhasePoint x = initialize(seed, sys, sc.forces, mode, icfg);
    Simulator sim(sys, sc.forces, mode, icfg);
    const std::vector<ObservableRecord> recs = sim.run(x, sc.steps, sc.record_every);

    const auto cut = static_cast<std::ptrdiff_t>(
        std::floor(sc.transient_fraction * static_cast<double>(recs.size())));
    const std::vector<ObservableRecord> tail(recs.begin() + cut, recs.end());

    SeedObservation o;
    o.kinetic = block_average(column(tail, &ObservableRecord::kinetic));
    o.j = block_average(column(tail, &ObservableRecord::current));
    o.potential = block_average(column(tail, &ObservableRecord::potential));
    o.alpha = block_average(column(tail, &ObservableRecord::alpha));
    return o;
}

/// pooled mean of independent seed estimates; sigma is the larger of the
/// propagated block error and the empirical scatter of the seed means
PooledStat pool(const std::vector<BlockStats>& parts, double scale = 1.0) {
    const auto r_count = static_cast<double>(parts.size());
    PooledStat p;
    double var_prop = 0.0;
    for (const BlockStats& b : parts) {
        p.mean += b.mean;
        var_prop += b.std_error * b.std_error;
    }
    p.mean = scale * p.mean / r_count;
    double prop = scale * std::sqrt(var_prop) / r_count;
    double scatter = 0.0;
    if (parts.size() >= 2) {
        double ss = 0.0;
        for (const BlockStats& b : parts) {
            const double d = scale * b.mean - p.mean;
            ss += d * d;
        }
        scatter = std::sqrt(ss / (r_count - 1.0)) / std::sqrt(r_count);
    }
    p.sigma = std::max(prop, scatter);
    return p;
}

/// the energy-conserving runs fixing one state point; shared verbatim by
/// match_state_point and the ladder so both see identical trajectories
std::vector<SeedObservation> run_matching_side(const EquivalenceStudyConfig& sc, int n,
                                               std::uint64_t base_seed, int workers) {
    const SystemSpec sys = sc.system_for(n);
    const double target = n * sc.h0;
    std::vector<SeedObservation> obs(static_cast<std::size_t>(sc.seeds));
    for_each_seed(sc.seeds, workers, [&](int r) {
        const std::uint64_t seed =
            derive_seed(base_seed, "match", static_cast<std::uint64_t>(n),
                        static_cast<std::uint64_t>(r));
        obs[static_cast<std::size_t>(r)] =
            observe_run(sc, sys, ThermostatKind::Isoenergetic, target, seed);
    });
    return obs;
}

std::vector<BlockStats> pick(const std::vector<SeedObservation>& obs,
                             BlockStats SeedObservation::*field) {
    std::vector<BlockStats> out;
    out.reserve(obs.size());
    for (const SeedObservation& o : obs) out.push_back(o.*field);
    return out;
}

json pooled_to_json(const PooledStat& p) {
    return {{"mean", p.mean}, {"sigma", p.sigma}};
}

json row_to_json_obj(const SizeRow& row) {
    return {{"n", row.n},
            {"target_total", row.match.target_total},
            {"k0", pooled_to_json(row.match.kinetic)},
            {"j_ik", pooled_to_json(row.j_ik)},
            {"j_ie", pooled_to_json(row.j_ie)},
            {"v_per_n_ik", pooled_to_json(row.v_per_n_ik)},
            {"v_per_n_ie", pooled_to_json(row.v_per_n_ie)},
            {"alpha_ik", pooled_to_json(row.alpha_ik)},
            {"alpha_ie", pooled_to_json(row.alpha_ie)},
            {"delta_j", {{"value", row.delta_j()}, {"sigma", row.delta_j_sigma()}}},
            {"delta_v_per_n",
             {{"value", row.delta_v_per_n()}, {"sigma", row.delta_v_per_n_sigma()}}},
            {"delta_alpha",
             {{"value", row.delta_alpha()}, {"sigma", row.delta_alpha_sigma()}}}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    if (!out) throw IoError("write failure: " + path);
}

double combined_sigma(const PooledStat& a, const PooledStat& b) {
    return std::sqrt(a.sigma * a.sigma + b.sigma * b.sigma);
}

} // namespace

void EquivalenceStudyConfig::validate() const {
    if (sizes.size() < 3)
        throw ValidationError("equivalence study wants at least 3 ladder sizes");
    for (int n : sizes)
        if (n < 1) throw ValidationError("ladder sizes must be positive particle counts");
    if (seeds < 2) throw ValidationError("equivalence study wants at least 2 seeds");
    if (!(density > 0.0)) throw ValidationError("study density must be positive");
    if (!(h0 > 0.0)) throw ValidationError("study h0 must be positive");
    if (steps < 1) throw ValidationError("study steps must be positive");
    if (record_every < 1) throw ValidationError("study record_every must be positive");
    if (!(transient_fraction >= 0.0) || !(transient_fraction < 1.0))
        throw ValidationError("study transient_fraction must lie in [0, 1)");
    integrator.validate();
}

SystemSpec EquivalenceStudyConfig::system_for(int n) const {
    SystemSpec sys = base_system;
    sys.particle_count = n;
    const int d = sys.dim();
    if (d < 1) throw ValidationError("study geometry needs at least one dimension");
    const double edge = std::pow(n / density, 1.0 / d);
    sys.box.assign(static_cast<std::size_t>(d), edge);
    sys.validate();
    return sys;
}

EquivalenceStudyConfig study_from_run_config(const RunConfig& cfg) {
    EquivalenceStudyConfig sc;
    sc.sizes = cfg.study.sizes;
    sc.density = cfg.study.density;
    sc.h0 = cfg.study.h0;
    sc.seeds = cfg.study.seeds;
    sc.steps = cfg.study.steps;
    sc.record_every = cfg.record_every;
    sc.transient_fraction = cfg.study.transient_fraction;
    sc.base_system = cfg.system;
    sc.forces = cfg.forces;
    sc.integrator = cfg.integrator;
    return sc;
}

double SizeRow::delta_j_sigma() const { return combined_sigma(j_ik, j_ie); }
double SizeRow::delta_v_per_n_sigma() const { return combined_sigma(v_per_n_ik, v_per_n_ie); }
double SizeRow::delta_alpha_sigma() const { return combined_sigma(alpha_ik, alpha_ie); }

StatePointMatch match_state_point(const EquivalenceStudyConfig& sc, int n,
                                  std::uint64_t base_seed, int workers) {
    sc.validate();
    const std::vector<SeedObservation> obs = run_matching_side(sc, n, base_seed, workers);
    StatePointMatch m;
    m.n = n;
    m.target_total = n * sc.h0;
    m.kinetic = pool(pick(obs, &SeedObservation::kinetic));
    return m;
}

EquivalenceReport run_equivalence_study(const EquivalenceStudyConfig& sc,
                                        std::uint64_t base_seed, int workers,
                                        const std::string& out_dir) {
    sc.validate();
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    std::vector<int> order = sc.sizes;
    std::sort(order.begin(), order.end());

    EquivalenceReport report;
    report.base_seed = base_seed;
    for (int n : order) {
        const std::vector<SeedObservation> ie_obs = run_matching_side(sc, n, base_seed, workers);

        SizeRow row;
        row.n = n;
        row.match.n = n;
        row.match.target_total = n * sc.h0;
        row.match.kinetic = pool(pick(ie_obs, &SeedObservation::kinetic));
        row.j_ie = pool(pick(ie_obs, &SeedObservation::j));
        row.v_per_n_ie = pool(pick(ie_obs, &SeedObservation::potential), 1.0 / n);
        row.alpha_ie = pool(pick(ie_obs, &SeedObservation::alpha));

        const SystemSpec sys = sc.system_for(n);
        const double k0 = row.match.k0();
        std::vector<SeedObservation> ik_obs(static_cast<std::size_t>(sc.seeds));
        for_each_seed(sc.seeds, workers, [&](int r) {
            const std::uint64_t seed =
                derive_seed(base_seed, "ladder-ik", static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(r));
            ik_obs[static_cast<std::size_t>(r)] =
                observe_run(sc, sys, ThermostatKind::Isokinetic, k0, seed);
        });
        row.j_ik = pool(pick(ik_obs, &SeedObservation::j));
        row.v_per_n_ik = pool(pick(ik_obs, &SeedObservation::potential), 1.0 / n);
        row.alpha_ik = pool(pick(ik_obs, &SeedObservation::alpha));

        report.rows.push_back(row);
        if (!out_dir.empty())
            write_text(out_dir + "/size_" + std::to_string(n) + ".json",
                       size_row_to_json(row));
    }

    if (!out_dir.empty())
        write_text(out_dir + "/equivalence_report.json", equivalence_report_to_json(report));
    return report;
}

std::string size_row_to_json(const SizeRow& row) {
    return row_to_json_obj(row).dump(2) + "\n";
}

std::string equivalence_report_to_json(const EquivalenceReport& report) {
    json rows = json::array();
    for (const SizeRow& row : report.rows) rows.push_back(row_to_json_obj(row));
    json j{{"artifact_version", kArtifactVersion},
           {"base_seed", report.base_seed},
           {"rows", rows}};
    return j.dump(2) + "\n";
}

} // namespace thermoeq
