#include "thermoeq/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "thermoeq/errors.hpp"
#include "thermoeq/rng.hpp"

namespace thermoeq {

namespace {

constexpr double kMomentumFloor = 1e-300;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double checked_p2(const std::vector<double>& p) {
    const double p2 = dot(p, p);
    if (p2 < kMomentumFloor)
        throw ZeroMomentumError("momentum square underflow during integration");
    return p2;
}

} // namespace

void IntegratorConfig::validate() const {
    if (!(dt > 0.0)) throw ValidationError("dt must be positive");
    if (!(reflection_tol > 0.0)) throw ValidationError("reflection_tol must be positive");
    if (max_reflections < 1) throw ValidationError("max_reflections must be at least 1");
    if (!std::isfinite(constraint_target))
        throw ValidationError("constraint_target must be finite");
}

Simulator::Simulator(SystemSpec spec, ForceFieldSpec ffield, ThermostatMode mode,
                     IntegratorConfig cfg)
    : field_(std::move(spec), std::move(ffield)), mode_(mode), cfg_(cfg) {
    cfg_.validate();
    mode_.validate(field_.params());

    const int d = field_.spec().dim();
    const auto& xi = field_.params().xi;
    double n2 = 0.0;
    for (int k = 0; k < d; ++k) n2 += xi[k] * xi[k];
    xi_norm_ = std::sqrt(n2);
    xi_unit_.assign(d, 0.0);
    if (xi_norm_ > 0.0)
        for (int k = 0; k < d; ++k) xi_unit_[k] = xi[k] / xi_norm_;

    const std::size_t dof = static_cast<std::size_t>(field_.spec().dof());
    for (auto* v : {&f_, &grad_, &grad_aux_, &k1q_, &k1p_, &k2q_, &k2p_, &k3q_, &k3p_,
                    &k4q_, &k4p_, &sq_, &sp_, &tq_, &tp_, &bq_, &bp_})
        v->resize(dof);
}

double Simulator::rhs(const std::vector<double>& q, const std::vector<double>& p,
                      std::vector<double>& dq, std::vector<double>& dp) const {
    const SystemSpec& spec = field_.spec();
    const double m = spec.mass;
    const int n = spec.particle_count;
    const int d = spec.dim();

    field_.total_force(q, f_);

    double alpha = 0.0;
    switch (mode_.kind) {
        case ThermostatKind::ConstantAlpha:
            alpha = mode_.alpha_const;
            break;
        case ThermostatKind::Isokinetic:
            alpha = dot(f_, p) / checked_p2(p);
            break;
        case ThermostatKind::Isoenergetic: {
            const auto& xf = field_.drive_flat();
            double s = 0.0;
            for (std::size_t idx = 0; idx < p.size(); ++idx) s += xf[idx] * p[idx];
            alpha = s / checked_p2(p);
            break;
        }
        case ThermostatKind::Generalized: {
            field_.potential_and_gradient(q, grad_);
            field_.auxiliary_potential_and_gradient(q, grad_aux_);
            const double ratio = field_.params().auxiliary->mass / m;
            const auto& xf = field_.drive_flat();
            double s = 0.0;
            for (std::size_t idx = 0; idx < p.size(); ++idx)
                s += (ratio * grad_aux_[idx] - grad_[idx] + xf[idx]) * p[idx];
            alpha = s / checked_p2(p);
            break;
        }
    }

    const double inv_m = 1.0 / m;
    for (int i = 0; i < n * d; ++i) {
        dq[i] = p[i] * inv_m;
        dp[i] = f_[i] - alpha * p[i];
    }
    return alpha;
}

void Simulator::rk4(const std::vector<double>& q, const std::vector<double>& p, double h,
                    std::vector<double>& q_out, std::vector<double>& p_out,
                    double* alpha0) const {
    const std::size_t n = q.size();
    const double a1 = rhs(q, p, k1q_, k1p_);
    if (alpha0) *alpha0 = a1;

    const double h2 = 0.5 * h;
    for (std::size_t i = 0; i < n; ++i) {
        sq_[i] = q[i] + h2 * k1q_[i];
        sp_[i] = p[i] + h2 * k1p_[i];
    }
    rhs(sq_, sp_, k2q_, k2p_);
    for (std::size_t i = 0; i < n; ++i) {
        sq_[i] = q[i] + h2 * k2q_[i];
        sp_[i] = p[i] + h2 * k2p_[i];
    }
    rhs(sq_, sp_, k3q_, k3p_);
    for (std::size_t i = 0; i < n; ++i) {
        sq_[i] = q[i] + h * k3q_[i];
        sp_[i] = p[i] + h * k3p_[i];
    }
    rhs(sq_, sp_, k4q_, k4p_);

    const double h6 = h / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
        q_out[i] = q[i] + h6 * (k1q_[i] + 2.0 * (k2q_[i] + k3q_[i]) + k4q_[i]);
        p_out[i] = p[i] + h6 * (k1p_[i] + 2.0 * (k2p_[i] + k3p_[i]) + k4p_[i]);
    }
}

bool Simulator::inside_walls(const std::vector<double>& q) const {
    const SystemSpec& spec = field_.spec();
    const int d = spec.dim();
    for (int i = 0; i < spec.particle_count; ++i)
        for (int k = 0; k < spec.wall_dims; ++k) {
            const double c = q[static_cast<std::size_t>(i) * d + k];
            if (c < 0.0 || c > spec.box[k]) return false;
        }
    return true;
}

Derivatives Simulator::vector_field(const PhasePoint& x) const {
    Derivatives out;
    out.dq.resize(x.q.size());
    out.dp.resize(x.p.size());
    out.alpha = rhs(x.q, x.p, out.dq, out.dp);
    return out;
}

void Simulator::project(PhasePoint& x, StepReport& rep) {
    const SystemSpec& spec = field_.spec();
    switch (mode_.kind) {
        case ThermostatKind::ConstantAlpha:
            return;
        case ThermostatKind::Isokinetic: {
            if (!cfg_.projection) return;
            const double k = field_.kinetic_energy(x.p);
            rep.constraint_residual = std::abs(k - cfg_.constraint_target);
            if (k * 2.0 * spec.mass < kMomentumFloor)
                throw ZeroMomentumError("cannot project onto zero kinetic energy");
            const double scale = std::sqrt(cfg_.constraint_target / k);
            for (double& c : x.p) c *= scale;
            return;
        }
        case ThermostatKind::Isoenergetic: {
            if (!cfg_.projection) return;
            const double v = field_.potential_energy(x.q);
            const double k = field_.kinetic_energy(x.p);
            rep.constraint_residual = std::abs(k + v - cfg_.constraint_target);
            const double need = cfg_.constraint_target - v;
            if (!(need > 0.0))
                throw InfeasibleEnergyError(
                    "total-energy target " + std::to_string(cfg_.constraint_target) +
                    " fell below the potential energy " + std::to_string(v));
            if (k * 2.0 * spec.mass < kMomentumFloor)
                throw ZeroMomentumError("cannot project onto zero kinetic energy");
            const double scale = std::sqrt(need / k);
            for (double& c : x.p) c *= scale;
            return;
        }
        case ThermostatKind::Generalized: {
            if (!cfg_.projection) return;
            const double m_aux = field_.params().auxiliary->mass;
            double p2 = 0.0;
            for (double c : x.p) p2 += c * c;
            const double k_aux = p2 / (2.0 * m_aux);
            const double v_aux = field_.auxiliary_potential_and_gradient(x.q, grad_aux_);
            rep.constraint_residual = std::abs(k_aux + v_aux - cfg_.constraint_target);
            const double need = cfg_.constraint_target - v_aux;
            if (!(need > 0.0))
                throw InfeasibleEnergyError("auxiliary energy target fell below the "
                                            "auxiliary potential");
            if (p2 < kMomentumFloor)
                throw ZeroMomentumError("cannot project onto zero kinetic energy");
            const double scale = std::sqrt(need / k_aux);
            for (double& c : x.p) c *= scale;
            return;
        }
    }
}

StepReport Simulator::step(PhasePoint& x) {
    StepReport rep;
    double remaining = cfg_.dt;
    bool first = true;
    while (remaining > 0.0) {
        rk4(x.q, x.p, remaining, tq_, tp_, first ? &rep.alpha_used : nullptr);
        first = false;
        if (inside_walls(tq_)) {
            x.q = tq_;
            x.p = tp_;
            break;
        }
        // earliest wall crossing lies in (lo, hi]; shrink to reflection_tol
        double lo = 0.0, hi = remaining;
        while (hi - lo > cfg_.reflection_tol) {
            const double mid = 0.5 * (lo + hi);
            rk4(x.q, x.p, mid, bq_, bp_, nullptr);
            if (inside_walls(bq_)) lo = mid;
            else hi = mid;
        }
        rk4(x.q, x.p, hi, bq_, bp_, nullptr);
        x.q = bq_;
        x.p = bp_;
        const SystemSpec& spec = field_.spec();
        const int d = spec.dim();
        for (int i = 0; i < spec.particle_count; ++i)
            for (int k = 0; k < spec.wall_dims; ++k) {
                double& c = x.q[static_cast<std::size_t>(i) * d + k];
                double& pc = x.p[static_cast<std::size_t>(i) * d + k];
                if (c < 0.0) {
                    c = -c;
                    pc = -pc;
                    ++rep.reflections;
                } else if (c > spec.box[k]) {
                    c = 2.0 * spec.box[k] - c;
                    pc = -pc;
                    ++rep.reflections;
                }
            }
        if (rep.reflections > cfg_.max_reflections)
            throw MaxReflectionsError("more than " + std::to_string(cfg_.max_reflections) +
                                      " wall reflections in a single step");
        remaining -= hi;
    }
    wrap_torus_inplace(x.q, field_.spec());
    project(x, rep);
    return rep;
}

ObservableRecord Simulator::observe(const PhasePoint& x, double t) const {
    const SystemSpec& spec = field_.spec();
    const double m = spec.mass;
    const int n = spec.particle_count;
    const int d = spec.dim();

    ObservableRecord r;
    r.t = t;

    const double v = field_.total_force(x.q, f_);
    field_.potential_and_gradient(x.q, grad_);
    r.potential = v;
    r.kinetic = field_.kinetic_energy(x.p);
    r.total_energy = r.kinetic + r.potential;

    const double p2 = dot(x.p, x.p);
    const auto& xf = field_.drive_flat();
    double xi_dot_p = 0.0;
    for (std::size_t idx = 0; idx < x.p.size(); ++idx) xi_dot_p += xf[idx] * x.p[idx];

    switch (mode_.kind) {
        case ThermostatKind::ConstantAlpha:
            r.alpha = mode_.alpha_const;
            break;
        case ThermostatKind::Isokinetic:
            r.alpha = dot(f_, x.p) / checked_p2(x.p);
            break;
        case ThermostatKind::Isoenergetic:
            r.alpha = xi_dot_p / checked_p2(x.p);
            break;
        case ThermostatKind::Generalized: {
            field_.auxiliary_potential_and_gradient(x.q, grad_aux_);
            const double ratio = field_.params().auxiliary->mass / m;
            double s = 0.0;
            for (std::size_t idx = 0; idx < x.p.size(); ++idx)
                s += (ratio * grad_aux_[idx] - grad_[idx] + xf[idx]) * x.p[idx];
            r.alpha = s / checked_p2(x.p);
            break;
        }
    }

    // momentum along each particle's own drive direction, so counterflow
    // under an alternating pattern accumulates instead of cancelling
    if (xi_norm_ > 0.0) {
        double along = 0.0;
        for (int i = 0; i < n; ++i) {
            double pe = 0.0;
            for (int k = 0; k < d; ++k)
                pe += x.p[static_cast<std::size_t>(i) * d + k] * xi_unit_[k];
            along += field_.drive_sign(i) * pe;
        }
        r.current = along / (n * m * xi_norm_);
    }

    r.heat_rate = (xi_dot_p - r.alpha * p2) / m;
    r.stationarity = dot(grad_, x.p) / m;
    return r;
}

std::vector<ObservableRecord> Simulator::run(PhasePoint& x, long n_steps, long record_every,
                                             long start_step) {
    if (n_steps < 0) throw ValidationError("n_steps must be non-negative");
    if (record_every < 1) throw ValidationError("record_every must be at least 1");
    std::vector<ObservableRecord> records;
    records.reserve(static_cast<std::size_t>(n_steps / record_every) + 2);
    if (start_step % record_every == 0)
        records.push_back(observe(x, static_cast<double>(start_step) * cfg_.dt));
    for (long k = 1; k <= n_steps; ++k) {
        step(x);
        const long abs_step = start_step + k;
        if (abs_step % record_every == 0)
            records.push_back(observe(x, static_cast<double>(abs_step) * cfg_.dt));
    }
    return records;
}

std::vector<ObservableRecord> run_trajectory(PhasePoint& x, const SystemSpec& spec,
                                             const ForceFieldSpec& ffield,
                                             const ThermostatMode& mode,
                                             const IntegratorConfig& cfg, long n_steps,
                                             long record_every, long start_step) {
    Simulator sim(spec, ffield, mode, cfg);
    return sim.run(x, n_steps, record_every, start_step);
}

PhasePoint initialize(std::uint64_t seed, const SystemSpec& spec, const ForceFieldSpec& ffield,
                      const ThermostatMode& mode, const IntegratorConfig& cfg) {
    spec.validate();
    ffield.validate(spec);
    mode.validate(ffield);
    cfg.validate();
    if (!(cfg.constraint_target > 0.0))
        throw ValidationError("constraint_target must be positive to initialize");

    ForceField field(spec, ffield);
    Rng rng(seed);
    const int n = spec.particle_count;
    const int d = spec.dim();
    const double min_sep = 0.8 * ffield.pair_range;
    const double min_sep2 = min_sep * min_sep;

    long attempts = 0;
    constexpr long kMaxAttempts = 1'000'000;
    constexpr int kMaxEnergyResamples = 100;

    // Rejection sampling at separation 0.8 rc; returns false once the global
    // attempt budget runs out (dense systems with a long interaction range).
    auto place_by_rejection = [&](std::vector<double>& q) {
        for (int i = 0; i < n; ++i) {
            for (;;) {
                if (++attempts > kMaxAttempts) return false;
                for (int k = 0; k < d; ++k)
                    q[static_cast<std::size_t>(i) * d + k] = rng.uniform(0.0, spec.box[k]);
                bool ok = true;
                for (int j = 0; j < i && ok; ++j) {
                    double s = 0.0;
                    for (int k = 0; k < d; ++k) {
                        double c = q[static_cast<std::size_t>(i) * d + k] -
                                   q[static_cast<std::size_t>(j) * d + k];
                        if (!spec.is_wall_dim(k)) c = minimum_image_1d(c, spec.box[k]);
                        s += c * c;
                    }
                    if (s < min_sep2) ok = false;
                }
                if (ok) break;
            }
        }
        return true;
    };

    // Fallback when the box cannot be packed at that separation: a jittered
    // cubic lattice. The pair potential is bounded, so even a start with
    // range overlaps is a legal low-potential state.
    auto place_on_lattice = [&](std::vector<double>& q) {
        const int side = static_cast<int>(
            std::ceil(std::pow(static_cast<double>(n), 1.0 / d) - 1e-9));
        for (int i = 0; i < n; ++i) {
            int rem = i;
            for (int k = d - 1; k >= 0; --k) {
                const int digit = rem % side;
                rem /= side;
                const double cell = spec.box[k] / side;
                q[static_cast<std::size_t>(i) * d + k] =
                    (digit + 0.5 + 0.1 * (rng.uniform() - 0.5)) * cell;
            }
        }
    };

    // Random sequential addition of d-balls jams near coverage 0.55; above
    // half coverage the rejection loop would only burn its budget, so go
    // straight to the lattice.
    const double ball_volume = std::pow(std::numbers::pi, 0.5 * d) *
                               std::pow(0.5 * min_sep, d) / std::tgamma(0.5 * d + 1.0);
    bool use_lattice = n * ball_volume / spec.volume() > 0.5;
    for (int round = 0; round < kMaxEnergyResamples; ++round) {
        PhasePoint x;
        x.q.resize(static_cast<std::size_t>(n) * d);
        if (!use_lattice && !place_by_rejection(x.q)) use_lattice = true;
        if (use_lattice) place_on_lattice(x.q);

        x.p.resize(static_cast<std::size_t>(n) * d);
        for (double& c : x.p) c = rng.normal();
        if (n > 1) {
            // remove the centre-of-mass drift dimension by dimension
            for (int k = 0; k < d; ++k) {
                double mean = 0.0;
                for (int i = 0; i < n; ++i) mean += x.p[static_cast<std::size_t>(i) * d + k];
                mean /= n;
                for (int i = 0; i < n; ++i) x.p[static_cast<std::size_t>(i) * d + k] -= mean;
            }
        }

        double p2 = 0.0;
        for (double c : x.p) p2 += c * c;
        if (p2 < kMomentumFloor)
            throw ZeroMomentumError("sampled momenta vanished; cannot rescale");

        double need_kinetic = 0.0;
        double mass_for_kinetic = spec.mass;
        switch (mode.kind) {
            case ThermostatKind::Isokinetic:
            case ThermostatKind::ConstantAlpha:
                need_kinetic = cfg.constraint_target;
                break;
            case ThermostatKind::Isoenergetic: {
                const double v = field.potential_energy(x.q);
                need_kinetic = cfg.constraint_target - v;
                break;
            }
            case ThermostatKind::Generalized: {
                std::vector<double> scratch;
                const double v_aux = field.auxiliary_potential_and_gradient(x.q, scratch);
                need_kinetic = cfg.constraint_target - v_aux;
                mass_for_kinetic = ffield.auxiliary->mass;
                break;
            }
        }
        if (!(need_kinetic > 0.0)) continue;  // resample positions, energy target infeasible

        const double kin = p2 / (2.0 * mass_for_kinetic);
        const double scale = std::sqrt(need_kinetic / kin);
        for (double& c : x.p) c *= scale;
        return x;
    }
    throw InfeasibleEnergyError("energy target below the sampled potential after " +
                                std::to_string(kMaxEnergyResamples) + " position resamples");
}

} // namespace thermoeq
