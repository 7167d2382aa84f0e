#pragma once

#include <string>
#include <vector>

#include "thermoeq/force_field.hpp"
#include "thermoeq/geometry.hpp"
#include "thermoeq/integrator.hpp"
#include "thermoeq/thermostat.hpp"

namespace thermoeq {

/// Parameters of the size-ladder study and of per-particle targets.
/// h0 is the per-particle constraint level: the run target is N * h0
/// (kinetic energy for isokinetic / constant-friction runs, total energy
/// for isoenergetic runs, auxiliary energy for generalized runs).
struct StudyParams {
    std::vector<int> sizes = {16, 32, 64, 128, 256};
    double density = 0.4;
    double h0 = 1.5;
    int seeds = 4;
    /// steps per ladder run; inherits the [integrator] step count when the
    /// config file does not set [study] steps explicitly
    long steps = 100000;
    double transient_fraction = 0.2;

    void validate() const;
};

/// Fully resolved run description: geometry, interaction, thermostat,
/// integration plan, and study parameters. parse_config fills every field
/// either from the file or from the documented defaults.
struct RunConfig {
    SystemSpec system;
    ForceFieldSpec forces;
    ThermostatMode thermostat;
    IntegratorConfig integrator;
    long steps = 100000;
    long record_every = 10;
    StudyParams study;

    /// total constraint target N * h0 fed to initialize() and the projection
    double constraint_target() const { return system.particle_count * study.h0; }

    void validate() const;
};

/// Strict sectioned key = value parser.
///
/// Sections and keys:
///   [system]      u, v, box, N, m
///   [forces]      eps, rc, xi, gauge_shift, drive
///   [thermostat]  kind, alpha_const, mtilde, eps_tilde, rc_tilde
///   [integrator]  dt, steps, record_every, projection
///   [study]       sizes, density, h0, seeds, steps, transient_fraction
///
/// '#' and ';' start comments. Unknown sections or keys, duplicate keys,
/// malformed values, and keys outside any section all raise ParseError with
/// the offending line number. A file containing only "[system]\nN = 16" is
/// valid: every other field takes its default. When box is absent it is
/// derived from the study density, L = (N / density)^(1/dim) on every edge.
/// A scalar xi or gauge_shift is placed on the first coordinate axis.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);

/// Canonical serialization of every physics-relevant parameter, 17 significant
/// digits, fixed key order. Wall-clock metadata never enters this string.
std::string canonical_config_string(const RunConfig& cfg);

/// FNV-1a 64-bit hash of canonical_config_string, as 16 hex digits.
std::string config_digest(const RunConfig& cfg);

} // namespace thermoeq
