#pragma once

#include <optional>
#include <string>
#include <vector>

#include "thermoeq/geometry.hpp"
#include "thermoeq/matrix.hpp"

namespace thermoeq {

/// Parameters of an auxiliary energy function used by the generalized thermostat:
/// same smooth compact-support pair family, with its own strength, range, and mass.
struct AuxiliaryEnergySpec {
    double mass = 1.0;
    double pair_epsilon = 1.0;
    double pair_range = 1.0;
};

/// How the constant field xi is assigned to particles. Uniform drives every
/// particle by +xi. Alternating drives even-indexed particles by +xi and
/// odd-indexed ones by -xi (a two-species counterflow drive); it frustrates
/// the aligned collisionless state a uniform drive relaxes into, so dense
/// systems stay collision-dominated.
enum class DrivePattern { Uniform, Alternating };

std::string to_string(DrivePattern pattern);
DrivePattern drive_pattern_from_string(const std::string& name);

// Interaction and driving. The pair potential is the bounded, compactly
// supported bump phi(r) = eps * (1 - (r/rc)^2)^4 for r < rc, zero beyond;
// it is C^3 at the cutoff, so forces and Hessians are continuous there.
//
// gauge_shift moves a constant-gradient term between the potential and the
// driving field: the potential gains sum_i g.q_i while the per-particle drive
// gains +g, leaving the total force unchanged. The gauge term is uniform
// across particles regardless of the drive pattern.
struct ForceFieldSpec {
    double pair_epsilon = 1.0;
    double pair_range = 1.0;
    std::vector<double> xi;          // constant nonconservative field per dimension
    std::vector<double> gauge_shift; // constant gradient split between V and xi
    DrivePattern drive_pattern = DrivePattern::Uniform;
    std::optional<AuxiliaryEnergySpec> auxiliary;

    void validate(const SystemSpec& spec) const;
};

struct EnergyReport {
    double kinetic = 0.0;
    double potential = 0.0;
    double total = 0.0;  // computed as kinetic + potential, one addition
};

enum class PairPath { Auto, DoubleLoop, CellList };

/// Evaluator bound to one (SystemSpec, ForceFieldSpec) pair. Owns the scratch
/// used by the cell-list sweep so repeated evaluations do not allocate.
class ForceField {
public:
    ForceField(SystemSpec spec, ForceFieldSpec ffield);

    const SystemSpec& spec() const { return spec_; }
    const ForceFieldSpec& params() const { return ffield_; }

    /// phi(r) for one pair distance
    double pair_potential(double r) const;

    /// total potential including the gauge term sum_i g.q_i
    double potential_energy(const std::vector<double>& q, PairPath path = PairPath::Auto) const;

    /// gradient of the total potential w.r.t. every coordinate (the force is its negative)
    std::vector<double> potential_gradient(const std::vector<double>& q,
                                           PairPath path = PairPath::Auto) const;

    /// potential and gradient in one pair sweep
    double potential_and_gradient(const std::vector<double>& q, std::vector<double>& grad_out,
                                  PairPath path = PairPath::Auto) const;

    /// dof x dof second-derivative matrix of the total potential (gauge adds nothing)
    DenseMatrix potential_hessian(const std::vector<double>& q) const;

    /// sign carried by particle i's drive under the configured pattern
    double drive_sign(int i) const {
        return (alternating_ && (i & 1)) ? -1.0 : 1.0;
    }

    /// per-particle driving field s_i xi + gauge_shift, flattened like q
    std::vector<double> driving_field() const { return drive_flat_; }

    /// the same field as a cached reference (no allocation)
    const std::vector<double>& drive_flat() const { return drive_flat_; }

    /// total force -grad V + xi written into force_out; returns the potential
    double total_force(const std::vector<double>& q, std::vector<double>& force_out,
                       PairPath path = PairPath::Auto) const;

    /// potential and gradient of the auxiliary energy (generalized thermostat);
    /// throws ValidationError when no auxiliary spec is present
    double auxiliary_potential_and_gradient(const std::vector<double>& q,
                                            std::vector<double>& grad_out) const;

    EnergyReport energy_report(const PhasePoint& x) const;

    double kinetic_energy(const std::vector<double>& p) const;

    /// true if this system size and box select the cell-list sweep under Auto
    bool cell_path_active() const;

private:
    // pair term as a function of s = r^2: u(s) = eps (1 - s/rc^2)^4
    static double u_of_s(double s, double eps, double inv_rc2);
    static double du_ds(double s, double eps, double inv_rc2);
    static double d2u_ds2(double s, double eps, double inv_rc2);

    double accumulate_pairs(const std::vector<double>& q, std::vector<double>* grad,
                            double eps, double rc, bool cells) const;
    double sweep_double_loop(const std::vector<double>& q, std::vector<double>* grad,
                             double eps, double rc) const;
    double sweep_cell_list(const std::vector<double>& q, std::vector<double>* grad,
                           double eps, double rc) const;
    bool use_cells(PairPath path) const;
    void build_cells(const std::vector<double>& q) const;

    SystemSpec spec_;
    ForceFieldSpec ffield_;
    bool alternating_ = false;
    // Per-dimension rows for the two drive signs. drive_const_* hold the
    // constant part of the total force, (s xi + gauge) - gauge, combined
    // scalar-wise so a pure gauge shift cannot leak into the assembled force
    // through rounding.
    std::vector<double> drive_const_;     // even particles
    std::vector<double> drive_const_alt_; // odd particles (Alternating only)
    std::vector<double> gauge_;           // per dimension, zeros if unset
    std::vector<double> drive_flat_;      // s_i xi + gauge, flattened like q

    // cell-list geometry and scratch
    std::vector<int> cells_per_dim_;
    std::vector<double> cell_width_;
    std::vector<int> cell_stride_;
    int total_cells_ = 0;
    bool cells_feasible_ = false;
    mutable std::vector<int> cell_head_;
    mutable std::vector<int> cell_next_;
    mutable std::vector<int> neighbor_scratch_;
};

} // namespace thermoeq
