#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thermoeq/config.hpp"

namespace thermoeq {

/// Plan for the size-ladder comparison between the two thermostats. box and
/// particle_count of base_system are replaced per ladder size (edges from the
/// target density); constraint_target of integrator is replaced per run.
struct EquivalenceStudyConfig {
    std::vector<int> sizes = {16, 32, 64, 128, 256};
    double density = 0.4;
    double h0 = 1.5;
    int seeds = 4;
    long steps = 100000;
    long record_every = 10;
    double transient_fraction = 0.2;
    SystemSpec base_system;
    ForceFieldSpec forces;
    IntegratorConfig integrator;

    /// at least 3 ladder sizes and 2 seeds, plus per-field sanity
    void validate() const;

    /// geometry for one ladder size: N particles at the study density
    SystemSpec system_for(int n) const;
};

EquivalenceStudyConfig study_from_run_config(const RunConfig& cfg);

/// Pooled estimate across independent seed runs. sigma is the larger of the
/// propagated per-run block error and the seed-to-seed scatter of the means.
struct PooledStat {
    double mean = 0.0;
    double sigma = 0.0;
};

/// Result of matching one state point: steady kinetic energy of the
/// energy-conserving runs at total energy n * h0, pooled over seeds. The
/// kinetic-constraint runs are then pinned to k0 = kinetic_mean.
struct StatePointMatch {
    int n = 0;
    double target_total = 0.0;  // n * h0
    PooledStat kinetic;         // steady-state <K> +- sigma
    double k0() const { return kinetic.mean; }
};

StatePointMatch match_state_point(const EquivalenceStudyConfig& sc, int n,
                                  std::uint64_t base_seed, int workers = 1);

/// One ladder size: both thermostats at the matched state point, with the
/// three observables and their IK - IE differences.
struct SizeRow {
    int n = 0;
    StatePointMatch match;
    PooledStat j_ik, j_ie;
    PooledStat v_per_n_ik, v_per_n_ie;
    PooledStat alpha_ik, alpha_ie;

    double delta_j() const { return j_ik.mean - j_ie.mean; }
    double delta_v_per_n() const { return v_per_n_ik.mean - v_per_n_ie.mean; }
    double delta_alpha() const { return alpha_ik.mean - alpha_ie.mean; }
    double delta_j_sigma() const;
    double delta_v_per_n_sigma() const;
    double delta_alpha_sigma() const;
};

struct EquivalenceReport {
    std::uint64_t base_seed = 0;
    std::vector<SizeRow> rows;  // sorted by n ascending
};

/// Run the full ladder. Per size: `seeds` energy-conserving runs fix the
/// state point, then `seeds` kinetic-constraint runs at the matched k0.
/// Seed runs are distributed over `workers` threads; results are aggregated
/// by (size, mode, seed index) so the output is independent of scheduling.
/// With a non-empty out_dir every completed size is persisted immediately to
/// out_dir/size_<n>.json and the report to out_dir/equivalence_report.json.
EquivalenceReport run_equivalence_study(const EquivalenceStudyConfig& sc,
                                        std::uint64_t base_seed, int workers = 1,
                                        const std::string& out_dir = "");

std::string equivalence_report_to_json(const EquivalenceReport& report);
std::string size_row_to_json(const SizeRow& row);

} // namespace thermoeq
