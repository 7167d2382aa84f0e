#pragma once

#include <cstdint>
#include <vector>

#include "thermoeq/force_field.hpp"
#include "thermoeq/records.hpp"
#include "thermoeq/thermostat.hpp"

namespace thermoeq {

struct IntegratorConfig {
    double dt = 1e-3;
    bool projection = true;
    /// time-bisection tolerance for locating wall crossings
    double reflection_tol = 1e-12;
    /// K0 for isokinetic (and the initial K for constant_alpha), H0 for
    /// isoenergetic, auxiliary H0 for generalized
    double constraint_target = 1.0;
    int max_reflections = 100;

    void validate() const;
};

struct StepReport {
    /// friction coefficient evaluated at the state the step started from
    double alpha_used = 0.0;
    int reflections = 0;
    /// |K - K0| resp. |H - H0| measured after the step, before projection;
    /// zero when projection is disabled or the mode has no constraint
    double constraint_residual = 0.0;
};

struct Derivatives {
    std::vector<double> dq;
    std::vector<double> dp;
    double alpha = 0.0;
};

/// Draw an initial condition: positions by rejection sampling with minimum
/// pair separation 0.8 * pair_range, Gaussian momenta with the total momentum
/// removed (kept for N = 1), then rescaled onto the mode's constraint surface.
PhasePoint initialize(std::uint64_t seed, const SystemSpec& spec, const ForceFieldSpec& ffield,
                      const ThermostatMode& mode, const IntegratorConfig& cfg);

// One bound instance of the damped driven dynamics
//   dq/dt = p/m,   dp/dt = -grad V + xi - alpha p
// advanced with classical RK4. If a wall coordinate exits its box interval the
// crossing time is bisected to reflection_tol, the momentum component is
// reflected, and the remainder of the step is integrated; a post-step
// rescaling projects p back onto the constraint surface when enabled.
class Simulator {
public:
    Simulator(SystemSpec spec, ForceFieldSpec ffield, ThermostatMode mode, IntegratorConfig cfg);

    const SystemSpec& spec() const { return field_.spec(); }
    const ThermostatMode& mode() const { return mode_; }
    const IntegratorConfig& config() const { return cfg_; }
    const ForceField& field() const { return field_; }

    /// time derivative of the flow at x, plus the friction coefficient used
    Derivatives vector_field(const PhasePoint& x) const;

    /// advance x by one dt in place
    StepReport step(PhasePoint& x);

    /// advance n_steps, sampling every record_every-th step (step 0 included);
    /// step indices are offset by start_step so resumed runs keep their schedule
    std::vector<ObservableRecord> run(PhasePoint& x, long n_steps, long record_every,
                                      long start_step = 0);

    /// observables at a state; one pair sweep
    ObservableRecord observe(const PhasePoint& x, double t) const;

private:
    // dq,dp <- flow at (q,p); returns alpha
    double rhs(const std::vector<double>& q, const std::vector<double>& p,
               std::vector<double>& dq, std::vector<double>& dp) const;
    void rk4(const std::vector<double>& q, const std::vector<double>& p, double h,
             std::vector<double>& q_out, std::vector<double>& p_out, double* alpha0) const;
    bool inside_walls(const std::vector<double>& q) const;
    void project(PhasePoint& x, StepReport& rep);

    ForceField field_;
    ThermostatMode mode_;
    IntegratorConfig cfg_;
    std::vector<double> xi_unit_;   // direction of the bare xi, zeros if |xi| = 0
    double xi_norm_ = 0.0;

    // scratch; mutable so vector_field stays const without reallocating
    mutable std::vector<double> f_, grad_, grad_aux_;
    mutable std::vector<double> k1q_, k1p_, k2q_, k2p_, k3q_, k3p_, k4q_, k4p_;
    mutable std::vector<double> sq_, sp_, tq_, tp_, bq_, bp_;
};

/// Convenience wrapper: build a Simulator and run.
std::vector<ObservableRecord> run_trajectory(PhasePoint& x, const SystemSpec& spec,
                                             const ForceFieldSpec& ffield,
                                             const ThermostatMode& mode,
                                             const IntegratorConfig& cfg, long n_steps,
                                             long record_every, long start_step = 0);

} // namespace thermoeq
