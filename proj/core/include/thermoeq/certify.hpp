#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thermoeq/config.hpp"

namespace thermoeq {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;  // one line of measured numbers, also on failure
};

struct CertificationReport {
    std::vector<CheckResult> checks;
    bool all_passed() const;
};

/// Self-contained battery of physics checks against the configured system:
///   constraint-preservation  kinetic / total energy pinned to 1e-10 relative
///   gauge-invariance         kinetic-constraint runs ignore a potential
///                            regauging of the drive, energy-constraint runs
///                            respond to it
///   stationarity             <dV/dt> compatible with zero in steady state
///   proposition-bounds       constant-friction confinement, descent, and
///                            single-particle tightness of the momentum bound
///   identity-7               <Phi(K)(xi.p - alpha p^2)> -> 0 with horizon
///   lyapunov-pairing         spectrum sum matches the contraction rate and
///                            pairs around a common center
///   mutation-sign-flip       the energy drift detector catches a wrong-sign
///                            friction coefficient
///   integrator-order         energy residual scales like dt^4 when dt doubles
///
/// A check that throws is reported as failed with the message; nothing
/// escapes. Runs are seeded from base_seed, so the report is reproducible.
CertificationReport run_certification_suite(const RunConfig& cfg, std::uint64_t base_seed);

std::string certification_report_to_json(const CertificationReport& report);

} // namespace thermoeq
