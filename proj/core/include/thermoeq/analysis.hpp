#pragma once

#include <array>
#include <vector>

#include "thermoeq/force_field.hpp"
#include "thermoeq/geometry.hpp"
#include "thermoeq/records.hpp"
#include "thermoeq/thermostat.hpp"

namespace thermoeq {

/// Time-series statistics over equal blocks. The error bar is the spread of
/// the block means, which absorbs autocorrelation up to the block length.
struct BlockStats {
    double mean = 0.0;
    double std_error = 0.0;
    long n_blocks = 0;
    long block_len = 0;
};

/// Mean and stderr from the last n_blocks * (len / n_blocks) points.
/// Throws TooShortError unless len >= 4 * n_blocks; n_blocks must be >= 4.
BlockStats block_average(const std::vector<double>& series, long n_blocks = 8);

/// Extract one column of a record series.
std::vector<double> column(const std::vector<ObservableRecord>& recs,
                           double ObservableRecord::*field);

/// Index where the steady segment starts: the first 20% is discarded, and the
/// cumulative mean over the remainder must move by less than one block
/// standard error between the three-quarter mark and the end. Throws
/// TransientNotEndedError when the drift check fails.
long steady_start(const std::vector<double>& series);

/// Friction coefficients reconstructed from recorded time averages, as ratios
/// of per-unit-volume drive power, gradient power, and momentum square:
///   kinetic-constraint form  (<xi.p> - <gradV.p>) / <p^2>
///   energy-constraint form   <xi.p> / <p^2>
/// Numerators and denominators are time averages of the same record set, so
/// the difference of the two forms equals -<gradV.p>/<p^2> identically.
struct FrictionEstimates {
    BlockStats isokinetic;
    BlockStats isoenergetic;
    /// per-unit-volume time averages behind the ratios
    double drive_power_density = 0.0;     // <xi.p> / volume
    double gradient_power_density = 0.0;  // <gradV.p> / volume
    double momentum_square_density = 0.0; // <p^2> / volume
};

/// Requires an ungauged drive (the recorded current tracks the bare field).
/// Pass a steady-state segment; throws TooShortError on short input.
FrictionEstimates volume_averaged_alphas(const std::vector<ObservableRecord>& recs,
                                         const SystemSpec& spec,
                                         const ForceFieldSpec& ffield,
                                         long n_blocks = 8);

/// Block statistics of the recorded gradV.p/m series, whose time average
/// vanishes in a steady state (it is dV/dt along the flow).
BlockStats stationarity_residual(const std::vector<ObservableRecord>& recs,
                                 long n_blocks = 8);

/// Confinement certificate for a constant-friction run. With bounded drive
/// and pair energy the damped flow traps p^2/2m + V below
///   bound5 = max_xi^2/(2 m alpha^2) + max V
/// and p^2 below
///   bound6 = max_xi^2/alpha^2 + 2 m (max V - min V),
/// where max_xi^2 = N |xi|^2, max V = eps N(N-1)/2 and min V = 0 for the
/// repulsive pair energy. The report certifies the post-transient maxima,
/// the monotone descent toward the trap, and the vanishing time averages of
/// Phi(p^2/2m) (xi.p - alpha p^2) for Phi in {1, x, x^2}.
struct PropositionReport {
    double bound5_rhs = 0.0;
    double bound6_rhs = 0.0;
    /// 1e-6 + 3 * (final-quarter standard deviation) for each bound
    double tol_energy = 0.0;
    double tol_p2 = 0.0;
    /// first sample with p^2/2m + V <= bound5_rhs + tol_energy
    long first_confined_index = -1;
    double first_confined_time = 0.0;
    /// while the energy exceeds bound5_rhs + descent_margin it must decrease
    /// between consecutive samples
    double descent_margin = 0.0;
    bool descent_verified = false;
    double post_transient_max_H_like = 0.0;
    double post_transient_max_p2 = 0.0;
    bool energy_bound_holds = false;
    bool p2_bound_holds = false;
    /// time averages of Phi(K) * (xi.p - alpha p^2), Phi = 1, x, x^2
    std::array<BlockStats, 3> identity7_values{};
    /// |mean over the first quarter| / |mean over the whole segment|;
    /// a value above 1 means the average is still shrinking with the horizon
    std::array<double, 3> identity7_decay{};
};

/// Certify the confinement bounds on a ConstantAlpha record series.
/// Throws ValidationError unless mode is ConstantAlpha with alpha > 0, and
/// TransientNotEndedError when the trajectory never reaches the trap.
PropositionReport check_proposition(const std::vector<ObservableRecord>& recs,
                                    const SystemSpec& spec,
                                    const ForceFieldSpec& ffield,
                                    const ThermostatMode& mode);

} // namespace thermoeq
