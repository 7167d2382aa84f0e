#pragma once

#include <span>
#include <string>

#include "thermoeq/force_field.hpp"

namespace thermoeq {

enum class ThermostatKind { Isokinetic, Isoenergetic, Generalized, ConstantAlpha };

std::string to_string(ThermostatKind kind);
ThermostatKind thermostat_kind_from_string(const std::string& name);

struct ThermostatMode {
    ThermostatKind kind = ThermostatKind::Isokinetic;
    double alpha_const = 0.0;  // only read for ConstantAlpha

    void validate(const ForceFieldSpec& ffield) const;
};

// Friction coefficients alpha for the damped driven dynamics
//   dq/dt = p/m,   dp/dt = F + xi - alpha p.
//
// Isokinetic holds the kinetic energy fixed, isoenergetic holds kinetic plus
// potential fixed, and the generalized form holds an auxiliary energy
// p^2/(2 m~) + V~(q) fixed. Every variant throws ZeroMomentumError when
// |p|^2 underflows below 1e-300, where the quotient is meaningless.

/// F_total . p / p^2, with F_total the full force including the driving field
double alpha_isokinetic(std::span<const double> total_force, std::span<const double> p);

/// xi . p / p^2
double alpha_isoenergetic(std::span<const double> xi, std::span<const double> p);

/// ((m~/m) grad V~ - grad V + xi) . p / p^2
double alpha_generalized(std::span<const double> grad_v, std::span<const double> grad_v_aux,
                         std::span<const double> xi, std::span<const double> p,
                         double mass, double mass_aux);

/// Dispatch on the mode at a phase point; evaluates whatever fields it needs.
double alpha_for(const ThermostatMode& mode, const PhasePoint& x, const ForceField& field);

} // namespace thermoeq
