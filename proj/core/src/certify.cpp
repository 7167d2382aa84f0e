#include "thermoeq/certify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "thermoeq/analysis.hpp"
#include "thermoeq/errors.hpp"
#include "thermoeq/geometry.hpp"
#include "thermoeq/integrator.hpp"
#include "thermoeq/lyapunov.hpp"
#include "thermoeq/manifest.hpp"
#include "thermoeq/rng.hpp"

namespace thermoeq {

using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

/// relative drift of a conserved quantity over a record series
double max_relative_drift(const std::vector<ObservableRecord>& recs,
                          double ObservableRecord::*field) {
    const double ref = recs.front().*field;
    double worst = 0.0;
    for (const ObservableRecord& r : recs)
        worst = std::max(worst, std::abs(r.*field / ref - 1.0));
    return worst;
}

CheckResult check_constraint_preservation(const RunConfig& cfg, std::uint64_t seed) {
    CheckResult out{"constraint-preservation", false, ""};
    const long steps = 20000;

    ThermostatMode ik;
    ik.kind = ThermostatKind::Isokinetic;
    IntegratorConfig icfg = cfg.integrator;
    PhasePoint x = initialize(derive_seed(seed, "certify-ik"), cfg.system, cfg.forces, ik, icfg);
    Simulator sim_ik(cfg.system, cfg.forces, ik, icfg);
    const double drift_k = max_relative_drift(sim_ik.run(x, steps, 10),
                                              &ObservableRecord::kinetic);

    ThermostatMode ie;
    ie.kind = ThermostatKind::Isoenergetic;
    PhasePoint y = initialize(derive_seed(seed, "certify-ie"), cfg.system, cfg.forces, ie, icfg);
    Simulator sim_ie(cfg.system, cfg.forces, ie, icfg);
    const double drift_h = max_relative_drift(sim_ie.run(y, steps, 10),
                                              &ObservableRecord::total_energy);

    out.passed = drift_k < 1e-10 && drift_h < 1e-10;
    out.detail = "max |K/K0-1| = " + num(drift_k) + ", max |H/H0-1| = " + num(drift_h) +
                 " over " + std::to_string(steps) + " steps (want < 1e-10)";
    return out;
}

/// largest coordinate-wise difference between two phase points
double state_distance(const PhasePoint& a, const PhasePoint& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.q.size(); ++k)
        worst = std::max(worst, std::abs(a.q[k] - b.q[k]));
    for (std::size_t k = 0; k < a.p.size(); ++k)
        worst = std::max(worst, std::abs(a.p[k] - b.p[k]));
    return worst;
}

double gauge_response(const RunConfig& cfg, ThermostatKind kind, std::uint64_t seed,
                      long steps) {
    ForceFieldSpec plain = cfg.forces;
    std::fill(plain.gauge_shift.begin(), plain.gauge_shift.end(), 0.0);
    ForceFieldSpec shifted = plain;
    if (shifted.gauge_shift.empty())
        shifted.gauge_shift.assign(static_cast<std::size_t>(cfg.system.dim()), 0.0);
    shifted.gauge_shift[0] = 0.25;

    ThermostatMode mode;
    mode.kind = kind;
    IntegratorConfig icfg = cfg.integrator;
    PhasePoint x0 = initialize(seed, cfg.system, plain, mode, icfg);

    PhasePoint xa = x0, xb = x0;
    Simulator sim_a(cfg.system, plain, mode, icfg);
    Simulator sim_b(cfg.system, shifted, mode, icfg);
    for (long i = 0; i < steps; ++i) {
        sim_a.step(xa);
        sim_b.step(xb);
    }
    return state_distance(xa, xb);
}

CheckResult check_gauge_invariance(const RunConfig& cfg, std::uint64_t seed) {
    CheckResult out{"gauge-invariance", false, ""};
    const long steps = 2000;
    const double diff_ik =
        gauge_response(cfg, ThermostatKind::Isokinetic, derive_seed(seed, "certify-gauge-ik"),
                       steps);
    const double diff_ie =
        gauge_response(cfg, ThermostatKind::Isoenergetic, derive_seed(seed, "certify-gauge-ie"),
                       steps);
    out.passed = diff_ik <= 1e-12 && diff_ie > 1e-6;
    out.detail = "regauged drive moved the kinetic-constraint run by " + num(diff_ik) +
                 " (want <= 1e-12) and the energy-constraint run by " + num(diff_ie) +
                 " (want > 1e-6) over " + std::to_string(steps) + " steps";
    return out;
}

CheckResult check_stationarity(const RunConfig& cfg, std::uint64_t seed) {
    CheckResult out{"stationarity", false, ""};
    const long steps = 40000;

    ThermostatMode ik;
    ik.kind = ThermostatKind::Isokinetic;
    IntegratorConfig icfg = cfg.integrator;
    PhasePoint x =
        initialize(derive_seed(seed, "certify-stat"), cfg.system, cfg.forces, ik, icfg);
    Simulator sim(cfg.system, cfg.forces, ik, icfg);
    const auto recs = sim.run(x, steps, 10);

    const auto cut = static_cast<std::ptrdiff_t>(recs.size() / 4);
    const std::vector<ObservableRecord> tail(recs.begin() + cut, recs.end());
    const BlockStats st = stationarity_residual(tail);
    out.passed = std::abs(st.mean) <= 3.0 * st.std_error;
    out.detail = "<dV/dt> = " + num(st.mean) + " +- " + num(st.std_error) +
                 " (want |mean| <= 3 sigma)";
    return out;
}

/// the solvable one-particle flow dp/dt = xi - alpha p on a wide ring
std::vector<ObservableRecord> single_particle_run(double p0, SystemSpec& s_out,
                                                  ForceFieldSpec& f_out,
                                                  ThermostatMode& mode_out) {
    s_out = SystemSpec{};
    s_out.wall_dims = 0;
    s_out.torus_dims = 1;
    s_out.box = {50.0};
    s_out.particle_count = 1;
    f_out = ForceFieldSpec{};
    f_out.pair_epsilon = 0.0;
    f_out.pair_range = 1.0;
    f_out.xi = {0.5};
    mode_out = ThermostatMode{};
    mode_out.kind = ThermostatKind::ConstantAlpha;
    mode_out.alpha_const = 0.5;
    IntegratorConfig icfg;
    icfg.dt = 1e-3;
    PhasePoint x;
    x.q = {1.0};
    x.p = {p0};
    Simulator sim(s_out, f_out, mode_out, icfg);
    return sim.run(x, 40000, 10);
}

CheckResult check_proposition_bounds(const RunConfig&, std::uint64_t) {
    CheckResult out{"proposition-bounds", false, ""};

    SystemSpec s;
    ForceFieldSpec f;
    ThermostatMode mode;
    // approach from below: p^2 must saturate the bound without crossing it
    const auto cold = single_particle_run(1e-3, s, f, mode);
    const PropositionReport rep_cold = check_proposition(cold, s, f, mode);
    const bool tight = rep_cold.post_transient_max_p2 >= rep_cold.bound6_rhs - 1e-3 &&
                       rep_cold.post_transient_max_p2 <= rep_cold.bound6_rhs + 1e-6;

    // hot start: four times the trap energy, so the descent phase is real
    const auto hot = single_particle_run(-2.0, s, f, mode);
    const PropositionReport rep_hot = check_proposition(hot, s, f, mode);

    out.passed = rep_cold.energy_bound_holds && rep_cold.p2_bound_holds &&
                 rep_cold.descent_verified && tight && rep_hot.descent_verified &&
                 rep_hot.energy_bound_holds && rep_hot.first_confined_index > 0;
    out.detail = "cold start: max p^2 = " + num(rep_cold.post_transient_max_p2) +
                 " vs bound " + num(rep_cold.bound6_rhs) +
                 " (tight from below); hot start confined after t = " +
                 num(rep_hot.first_confined_time) + " with monotone descent " +
                 (rep_hot.descent_verified ? "verified" : "VIOLATED");
    return out;
}

CheckResult check_identity_7(const RunConfig& cfg, std::uint64_t seed) {
    CheckResult out{"identity-7", false, ""};
    const long steps = 40000;

    ThermostatMode mode;
    mode.kind = ThermostatKind::ConstantAlpha;
    mode.alpha_const = 0.5;
    ForceFieldSpec forces = cfg.forces;
    std::fill(forces.gauge_shift.begin(), forces.gauge_shift.end(), 0.0);
    IntegratorConfig icfg = cfg.integrator;
    PhasePoint x =
        initialize(derive_seed(seed, "certify-id7"), cfg.system, forces, mode, icfg);
    Simulator sim(cfg.system, forces, mode, icfg);
    const auto recs = sim.run(x, steps, 10);
    const PropositionReport rep = check_proposition(recs, cfg.system, forces, mode);

    bool ok = true;
    std::string values;
    for (int i = 0; i < 3; ++i) {
        const BlockStats& b = rep.identity7_values[static_cast<std::size_t>(i)];
        const double decay = rep.identity7_decay[static_cast<std::size_t>(i)];
        ok = ok && std::abs(b.mean) <= 3.0 * b.std_error && decay > 1.4;
        if (!values.empty()) values += "; ";
        values += num(b.mean) + " +- " + num(b.std_error) + ", decay " + num(decay);
    }
    out.passed = ok;
    out.detail = "Phi = 1, x, x^2 averages " + values +
                 " (want |mean| <= 3 sigma and decay > 1.4)";
    return out;
}

CheckResult check_lyapunov_pairing(const RunConfig& cfg, std::uint64_t seed) {
    CheckResult out{"lyapunov-pairing", false, ""};
    const long steps = 200000;

    SystemSpec s;
    s.wall_dims = 0;
    s.torus_dims = 2;
    s.particle_count = 2;
    const double edge = std::sqrt(2.0 / 0.4);
    s.box = {edge, edge};
    ForceFieldSpec f;
    f.pair_epsilon = cfg.forces.pair_epsilon;
    f.pair_range = std::min(cfg.forces.pair_range, 0.45 * edge);
    f.xi = {2.0, 0.0};
    ThermostatMode mode;
    mode.kind = ThermostatKind::Isoenergetic;
    IntegratorConfig icfg;
    icfg.dt = 1e-3;
    icfg.constraint_target = 2.0 * 1.5;

    PhasePoint x0 = initialize(derive_seed(seed, "certify-lyap"), s, f, mode, icfg);
    const LyapunovReport rep = lyapunov_spectrum(s, f, mode, icfg, x0, steps);

    const double rel_err = std::abs(rep.sum_exponents - rep.contraction_average) /
                           std::abs(rep.contraction_average);
    const double spread = rep.spread_by_exclusion[static_cast<std::size_t>(rep.best_exclusion)];
    const double pair_scale = std::abs(2.0 * rep.pairing_center);
    out.passed = rel_err < 0.02 && spread < 0.05 * pair_scale;
    out.detail = "sum(lambda) = " + num(rep.sum_exponents) + " vs contraction " +
                 num(rep.contraction_average) + " (rel err " + num(rel_err) +
                 ", want < 0.02); pair spread " + num(spread) + " vs |2c| = " +
                 num(pair_scale) + " (want < 5%), excluding " +
                 std::to_string(rep.best_exclusion) + " exponents";
    return out;
}

/// bare RK4 on the driven dynamics with a switchable friction sign; walls and
/// projection deliberately absent, this is the harness for the drift detector
double ie_energy_drift(const SystemSpec& s, const ForceField& field, double sign,
                       PhasePoint x, long steps, double dt) {
    const double m = s.mass;
    const auto dof = static_cast<std::size_t>(s.dof());
    const std::vector<double> xi = field.driving_field();
    std::vector<double> force(dof), yq(dof), yp(dof), dq(dof), dp(dof);
    std::vector<double> accq(dof), accp(dof), kq(dof), kp(dof);
    const double h0 = field.energy_report(x).total;

    static const double wgt[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
    static const double off[4] = {0.0, 0.5, 0.5, 1.0};
    for (long i = 0; i < steps; ++i) {
        std::fill(accq.begin(), accq.end(), 0.0);
        std::fill(accp.begin(), accp.end(), 0.0);
        for (int stage = 0; stage < 4; ++stage) {
            // kq, kp hold the previous stage's slope; stage 0 has offset 0
            for (std::size_t k = 0; k < dof; ++k) {
                yq[k] = x.q[k] + off[stage] * dt * kq[k];
                yp[k] = x.p[k] + off[stage] * dt * kp[k];
            }
            field.total_force(yq, force);
            const double alpha = sign * alpha_isoenergetic(xi, yp);
            for (std::size_t k = 0; k < dof; ++k) {
                dq[k] = yp[k] / m;
                dp[k] = force[k] - alpha * yp[k];
                accq[k] += wgt[stage] * dq[k];
                accp[k] += wgt[stage] * dp[k];
            }
            kq = dq;
            kp = dp;
        }
        for (std::size_t k = 0; k < dof; ++k) {
            x.q[k] += dt * accq[k];
            x.p[k] += dt * accp[k];
        }
        wrap_torus_inplace(x.q, s);
    }
    return std::abs(field.energy_report(x).total / h0 - 1.0);
}

CheckResult check_mutation_sign_flip(const RunConfig& cfg, std::uint64_t seed) {
    CheckResult out{"mutation-sign-flip", false, ""};
    const long steps = 2000;

    ForceFieldSpec forces = cfg.forces;
    std::fill(forces.gauge_shift.begin(), forces.gauge_shift.end(), 0.0);
    ThermostatMode mode;
    mode.kind = ThermostatKind::Isoenergetic;
    IntegratorConfig icfg = cfg.integrator;
    PhasePoint x0 =
        initialize(derive_seed(seed, "certify-mutant"), cfg.system, forces, mode, icfg);
    ForceField field(cfg.system, forces);

    const double healthy = ie_energy_drift(cfg.system, field, +1.0, x0, steps, icfg.dt);
    const double mutant = ie_energy_drift(cfg.system, field, -1.0, x0, steps, icfg.dt);
    out.passed = healthy < 1e-6 && mutant > 1e-3;
    out.detail = "relative energy drift " + num(healthy) +
                 " with the correct friction sign (want < 1e-6), " + num(mutant) +
                 " with the sign flipped (want > 1e-3): the detector separates them";
    return out;
}

CheckResult check_integrator_order(const RunConfig& cfg, std::uint64_t seed) {
    CheckResult out{"integrator-order", false, ""};
    // the horizon is kept short so the dt, 2 dt, and reference trajectories
    // stay paired; over longer windows the flow's own chaos decorrelates them
    // and the error coefficients stop being comparable
    const double t_final = 0.5;
    const double dt = 1e-3;

    ForceFieldSpec forces = cfg.forces;
    ThermostatMode mode;
    mode.kind = ThermostatKind::Isoenergetic;
    IntegratorConfig icfg = cfg.integrator;
    icfg.projection = false;

    auto advance = [&](PhasePoint x, double step_size) {
        IntegratorConfig c = icfg;
        c.dt = step_size;
        const long n = std::lround(t_final / step_size);
        Simulator sim(cfg.system, forces, mode, c);
        for (long i = 0; i < n; ++i) sim.step(x);
        return x;
    };

    // phase-space distance with torus coordinates folded to the nearest image
    auto state_err = [&](const PhasePoint& a, const PhasePoint& b) {
        const int d = cfg.system.dim();
        double ss = 0.0;
        for (std::size_t i = 0; i < a.q.size(); ++i) {
            double dq = a.q[i] - b.q[i];
            const int k = static_cast<int>(i) % d;
            if (!cfg.system.is_wall_dim(k)) dq = minimum_image_1d(dq, cfg.system.box[k]);
            ss += dq * dq;
            const double dp = a.p[i] - b.p[i];
            ss += dp * dp;
        }
        return std::sqrt(ss);
    };

    // error is measured against a dt/8 trajectory from the same start rather
    // than through the energy residual: the energy drift is a signed sum that
    // can cancel, while the state error at one crossing grows through the same
    // linearized flow for both step sizes, so its ratio stays near 2^4.
    // pooling the log-ratios over several starts irons out an unlucky draw
    // whose leading error coefficient happens to be small
    const int reps = 5;
    double lnsum = 0.0;
    std::string seen;
    for (int rep = 0; rep < reps; ++rep) {
        const PhasePoint x0 =
            initialize(derive_seed(seed, "certify-order", static_cast<std::uint64_t>(rep)),
                       cfg.system, forces, mode, icfg);
        const PhasePoint ref = advance(x0, dt / 8.0);
        const double e1 = state_err(advance(x0, dt), ref);
        const double e2 = state_err(advance(x0, 2.0 * dt), ref);
        const double r = e2 / e1;
        lnsum += std::log(r);
        if (!seen.empty()) seen += ", ";
        seen += num(r);
    }
    const double ratio = std::exp(lnsum / reps);
    out.passed = ratio >= 8.0 && ratio <= 32.0;
    out.detail = "state error against a dt/8 reference grew by " + seen +
                 " when dt doubled from " + num(dt) + "; geometric mean " + num(ratio) +
                 " (want within [8, 32] for fourth order)";
    return out;
}

} // namespace

bool CertificationReport::all_passed() const {
    for (const CheckResult& c : checks)
        if (!c.passed) return false;
    return !checks.empty();
}

CertificationReport run_certification_suite(const RunConfig& cfg, std::uint64_t base_seed) {
    using Check = CheckResult (*)(const RunConfig&, std::uint64_t);
    const Check checks[] = {
        check_constraint_preservation, check_gauge_invariance, check_stationarity,
        check_proposition_bounds,      check_identity_7,       check_lyapunov_pairing,
        check_mutation_sign_flip,      check_integrator_order,
    };
    static const char* names[] = {
        "constraint-preservation", "gauge-invariance", "stationarity", "proposition-bounds",
        "identity-7",              "lyapunov-pairing", "mutation-sign-flip",
        "integrator-order",
    };

    CertificationReport report;
    int idx = 0;
    for (Check fn : checks) {
        CheckResult r;
        try {
            r = fn(cfg, base_seed);
        } catch (const std::exception& e) {
            r.name = names[idx];
            r.passed = false;
            r.detail = std::string("check raised: ") + e.what();
        }
        ++idx;
        report.checks.push_back(std::move(r));
    }
    return report;
}

std::string certification_report_to_json(const CertificationReport& report) {
    json checks = json::array();
    for (const CheckResult& c : report.checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    json j{{"artifact_version", kArtifactVersion},
           {"all_passed", report.all_passed()},
           {"checks", checks}};
    return j.dump(2) + "\n";
}

} // namespace thermoeq
