#pragma once

#include <array>
#include <vector>

#include "thermoeq/force_field.hpp"
#include "thermoeq/geometry.hpp"
#include "thermoeq/integrator.hpp"
#include "thermoeq/matrix.hpp"
#include "thermoeq/thermostat.hpp"

namespace thermoeq {

/// Lyapunov spectrum of the damped driven flow, with the pairing diagnostics.
/// The spectrum of such flows is symmetric around a constant c except for a
/// small number of exceptional directions (the flow direction, and the
/// constraint direction when one is enforced). Because the exceptional count
/// is not known a priori the pair sums are evaluated with 0, 1 and 2
/// exponents of smallest magnitude excluded, and the convention with the
/// tightest spread is flagged.
struct LyapunovReport {
    /// sorted descending
    std::vector<double> exponents;
    double sum_exponents = 0.0;
    /// time average of the phase-space divergence along the trajectory
    double contraction_average = 0.0;

    /// half pair sums (lambda_i + lambda_{D'+1-i})/2 without exclusions,
    /// length floor(D'/2); their mean is the no-exclusion pairing center
    std::vector<double> pairing_residuals;
    /// center, and standard deviation of the pair sums, per exclusion count
    std::array<double, 3> center_by_exclusion{};
    std::array<double, 3> spread_by_exclusion{};
    int best_exclusion = 0;
    /// center of the best-fitting convention
    double pairing_center = 0.0;
};

/// Dense Jacobian of the flow at x: d(dq/dt, dp/dt)/d(q, p), using the
/// analytic friction derivatives and the pair-energy Hessian.
DenseMatrix flow_jacobian(const PhasePoint& x, const SystemSpec& spec,
                          const ForceFieldSpec& ffield, const ThermostatMode& mode);

/// Evolve an orthonormal tangent frame alongside the trajectory, QR-ing every
/// reorth_every steps; exponents are the mean log diagonal growth rates.
/// Requires a fully periodic box, at most 8 particles, and a kinetic- or
/// energy-constrained mode. Throws DegenerateFrameError when a diagonal
/// entry collapses under 1e-300.
LyapunovReport lyapunov_spectrum(const SystemSpec& spec, const ForceFieldSpec& ffield,
                                 const ThermostatMode& mode, const IntegratorConfig& cfg,
                                 const PhasePoint& x0, long n_steps,
                                 long reorth_every = 10);

} // namespace thermoeq
