#pragma once

#include <cstdint>
#include <string>

#include "thermoeq/integrator.hpp"

namespace thermoeq {

/// Everything needed to resume a run bit-for-bit: full parameter set, the step
/// counter, the seed the run was started from, and the exact phase point.
struct Checkpoint {
    SystemSpec spec;
    ForceFieldSpec ffield;
    ThermostatMode mode;
    IntegratorConfig cfg;
    long step_index = 0;
    std::uint64_t seed = 0;
    PhasePoint state;
};

/// JSON on disk; doubles are written so they round-trip exactly.
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

} // namespace thermoeq
