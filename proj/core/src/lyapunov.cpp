#include "thermoeq/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "thermoeq/errors.hpp"

namespace thermoeq {

namespace {

double momentum_square(const std::vector<double>& p) {
    double s = 0.0;
    for (double c : p) s += c * c;
    if (s < 1e-300) throw ZeroMomentumError("tangent flow at vanishing momentum");
    return s;
}

// per-state ingredients of the linearized flow:
//   d(dq)/dt = dp/m
//   d(dp)/dt = -H dq - (g.dq) p - alpha dp - (h.dp) p
// with g = d alpha/dq and h = d alpha/dp.
struct StageTerms {
    double alpha = 0.0;
    double trace = 0.0;  // divergence of the flow at this state
    std::vector<double> g, h;
    DenseMatrix hess{0, 0};
};

void stage_terms(const std::vector<double>& q, const std::vector<double>& p,
                 const ForceField& ff, const ThermostatMode& mode,
                 std::vector<double>& force_scratch, StageTerms& t) {
    const std::size_t D = p.size();
    const double p2 = momentum_square(p);
    ff.total_force(q, force_scratch);
    t.hess = ff.potential_hessian(q);
    t.g.assign(D, 0.0);
    t.h.assign(D, 0.0);

    if (mode.kind == ThermostatKind::Isokinetic) {
        double fp = 0.0;
        for (std::size_t a = 0; a < D; ++a) fp += force_scratch[a] * p[a];
        t.alpha = fp / p2;
        // g = -(H p)/p^2, h = F/p^2 - 2 alpha p/p^2
        for (std::size_t a = 0; a < D; ++a) {
            double hp = 0.0;
            for (std::size_t b = 0; b < D; ++b) hp += t.hess(a, b) * p[b];
            t.g[a] = -hp / p2;
            t.h[a] = force_scratch[a] / p2 - 2.0 * t.alpha * p[a] / p2;
        }
    } else {  // Isoenergetic
        const auto& xf = ff.drive_flat();
        double xp = 0.0;
        for (std::size_t a = 0; a < D; ++a) xp += xf[a] * p[a];
        t.alpha = xp / p2;
        for (std::size_t a = 0; a < D; ++a)
            t.h[a] = xf[a] / p2 - 2.0 * t.alpha * p[a] / p2;
    }

    double ph = 0.0;
    for (std::size_t a = 0; a < D; ++a) ph += p[a] * t.h[a];
    t.trace = -static_cast<double>(D) * t.alpha - ph;
}

// derivative of (q, p, Q); Q is column-major, 2D rows, ncols columns
void derivative(const std::vector<double>& q, const std::vector<double>& p,
                const std::vector<double>& Q, std::size_t ncols, const ForceField& ff,
                const ThermostatMode& mode, double mass, std::vector<double>& force_scratch,
                StageTerms& t, std::vector<double>& dq, std::vector<double>& dp,
                std::vector<double>& dQ) {
    const std::size_t D = p.size();
    stage_terms(q, p, ff, mode, force_scratch, t);
    for (std::size_t a = 0; a < D; ++a) {
        dq[a] = p[a] / mass;
        dp[a] = force_scratch[a] - t.alpha * p[a];
    }
    const std::size_t M = 2 * D;
    for (std::size_t c = 0; c < ncols; ++c) {
        const double* v = Q.data() + c * M;
        double* out = dQ.data() + c * M;
        const double* vq = v;
        const double* vp = v + D;
        double gdq = 0.0, hdp = 0.0;
        for (std::size_t a = 0; a < D; ++a) {
            gdq += t.g[a] * vq[a];
            hdp += t.h[a] * vp[a];
        }
        for (std::size_t a = 0; a < D; ++a) {
            out[a] = vp[a] / mass;
            double hv = 0.0;
            for (std::size_t b = 0; b < D; ++b) hv += t.hess(a, b) * vq[b];
            out[D + a] = -hv - gdq * p[a] - t.alpha * vp[a] - hdp * p[a];
        }
    }
}

// in-place modified Gram-Schmidt; adds log of each diagonal to acc
void mgs_qr(std::vector<double>& Q, std::size_t M, std::size_t ncols,
            std::vector<double>& acc) {
    for (std::size_t j = 0; j < ncols; ++j) {
        double* col = Q.data() + j * M;
        double nrm = 0.0;
        for (std::size_t a = 0; a < M; ++a) nrm += col[a] * col[a];
        nrm = std::sqrt(nrm);
        if (nrm < 1e-300)
            throw DegenerateFrameError("tangent frame collapsed in column " +
                                       std::to_string(j));
        for (std::size_t a = 0; a < M; ++a) col[a] /= nrm;
        acc[j] += std::log(nrm);
        for (std::size_t k = j + 1; k < ncols; ++k) {
            double* other = Q.data() + k * M;
            double r = 0.0;
            for (std::size_t a = 0; a < M; ++a) r += col[a] * other[a];
            for (std::size_t a = 0; a < M; ++a) other[a] -= r * col[a];
        }
    }
}

struct PairFit {
    double center = 0.0;
    double spread = 0.0;
};

// half-sum statistics of a descending spectrum with the n_excl exponents of
// smallest magnitude removed; an odd remainder self-pairs its middle entry
PairFit pair_fit(const std::vector<double>& sorted_desc, int n_excl,
                 std::vector<double>* half_sums_out = nullptr) {
    std::vector<double> kept = sorted_desc;
    for (int e = 0; e < n_excl && !kept.empty(); ++e) {
        std::size_t drop = 0;
        for (std::size_t i = 1; i < kept.size(); ++i)
            if (std::abs(kept[i]) < std::abs(kept[drop])) drop = i;
        kept.erase(kept.begin() + static_cast<long>(drop));
    }
    const std::size_t m = kept.size();
    std::vector<double> sums;
    for (std::size_t i = 0; i < m / 2; ++i) sums.push_back(kept[i] + kept[m - 1 - i]);
    if (m % 2 == 1) sums.push_back(2.0 * kept[m / 2]);

    PairFit fit;
    if (sums.empty()) return fit;
    double s = 0.0;
    for (double v : sums) s += v;
    const double mean = s / static_cast<double>(sums.size());
    fit.center = mean / 2.0;
    if (sums.size() > 1) {
        double var = 0.0;
        for (double v : sums) var += (v - mean) * (v - mean);
        fit.spread = std::sqrt(var / static_cast<double>(sums.size() - 1));
    }
    if (half_sums_out) {
        half_sums_out->clear();
        for (double v : sums) half_sums_out->push_back(v / 2.0);
    }
    return fit;
}

} // namespace

DenseMatrix flow_jacobian(const PhasePoint& x, const SystemSpec& spec,
                          const ForceFieldSpec& ffield, const ThermostatMode& mode) {
    if (mode.kind != ThermostatKind::Isokinetic &&
        mode.kind != ThermostatKind::Isoenergetic)
        throw ValidationError("flow linearization covers the constrained modes only");
    ForceField ff(spec, ffield);
    const std::size_t D = x.p.size();
    const std::size_t M = 2 * D;
    std::vector<double> force(D);
    StageTerms t;
    stage_terms(x.q, x.p, ff, mode, force, t);

    DenseMatrix J(M, M);
    for (std::size_t a = 0; a < D; ++a) J(a, D + a) = 1.0 / spec.mass;
    for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = 0; b < D; ++b) {
            J(D + a, b) = -t.hess(a, b) - t.g[b] * x.p[a];
            J(D + a, D + b) = (a == b ? -t.alpha : 0.0) - t.h[b] * x.p[a];
        }
    return J;
}

LyapunovReport lyapunov_spectrum(const SystemSpec& spec, const ForceFieldSpec& ffield,
                                 const ThermostatMode& mode, const IntegratorConfig& cfg,
                                 const PhasePoint& x0, long n_steps, long reorth_every) {
    spec.validate();
    cfg.validate();
    if (spec.wall_dims != 0)
        throw ValidationError("tangent evolution requires a fully periodic box");
    if (spec.particle_count > 8)
        throw ValidationError("tangent evolution is limited to 8 particles");
    if (mode.kind != ThermostatKind::Isokinetic &&
        mode.kind != ThermostatKind::Isoenergetic)
        throw ValidationError("tangent evolution covers the constrained modes only");
    if (n_steps < 1 || reorth_every < 1)
        throw ValidationError("step counts must be positive");

    ForceField ff(spec, ffield);
    const std::size_t D = x0.p.size();
    const std::size_t M = 2 * D;
    const double dt = cfg.dt;
    const double m = spec.mass;

    std::vector<double> q = x0.q, p = x0.p;
    std::vector<double> Q(M * M, 0.0);
    for (std::size_t j = 0; j < M; ++j) Q[j * M + j] = 1.0;

    std::vector<double> force(D), acc(M, 0.0);
    std::vector<double> k1q(D), k1p(D), k2q(D), k2p(D), k3q(D), k3p(D), k4q(D), k4p(D);
    std::vector<double> K1(M * M), K2(M * M), K3(M * M), K4(M * M);
    std::vector<double> tq(D), tp(D), TQ(M * M);
    StageTerms terms;

    double contraction_acc = 0.0;
    long since_qr = 0;

    for (long step = 0; step < n_steps; ++step) {
        derivative(q, p, Q, M, ff, mode, m, force, terms, k1q, k1p, K1);
        contraction_acc += terms.trace;

        for (std::size_t a = 0; a < D; ++a) {
            tq[a] = q[a] + 0.5 * dt * k1q[a];
            tp[a] = p[a] + 0.5 * dt * k1p[a];
        }
        for (std::size_t a = 0; a < M * M; ++a) TQ[a] = Q[a] + 0.5 * dt * K1[a];
        derivative(tq, tp, TQ, M, ff, mode, m, force, terms, k2q, k2p, K2);

        for (std::size_t a = 0; a < D; ++a) {
            tq[a] = q[a] + 0.5 * dt * k2q[a];
            tp[a] = p[a] + 0.5 * dt * k2p[a];
        }
        for (std::size_t a = 0; a < M * M; ++a) TQ[a] = Q[a] + 0.5 * dt * K2[a];
        derivative(tq, tp, TQ, M, ff, mode, m, force, terms, k3q, k3p, K3);

        for (std::size_t a = 0; a < D; ++a) {
            tq[a] = q[a] + dt * k3q[a];
            tp[a] = p[a] + dt * k3p[a];
        }
        for (std::size_t a = 0; a < M * M; ++a) TQ[a] = Q[a] + dt * K3[a];
        derivative(tq, tp, TQ, M, ff, mode, m, force, terms, k4q, k4p, K4);

        const double w = dt / 6.0;
        for (std::size_t a = 0; a < D; ++a) {
            q[a] += w * (k1q[a] + 2.0 * k2q[a] + 2.0 * k3q[a] + k4q[a]);
            p[a] += w * (k1p[a] + 2.0 * k2p[a] + 2.0 * k3p[a] + k4p[a]);
        }
        for (std::size_t a = 0; a < M * M; ++a)
            Q[a] += w * (K1[a] + 2.0 * K2[a] + 2.0 * K3[a] + K4[a]);

        wrap_torus_inplace(q, spec);

        if (cfg.projection) {
            // keep the base trajectory on its constraint surface; the frame
            // follows the linearized flow itself
            double p2 = momentum_square(p);
            if (mode.kind == ThermostatKind::Isokinetic) {
                const double target = 2.0 * m * cfg.constraint_target;
                const double f = std::sqrt(target / p2);
                for (auto& c : p) c *= f;
            } else {
                const double need = cfg.constraint_target - ff.potential_energy(q);
                if (need <= 0.0)
                    throw InfeasibleEnergyError(
                        "energy target fell below the potential along the tangent run");
                const double f = std::sqrt(2.0 * m * need / p2);
                for (auto& c : p) c *= f;
            }
        }

        if (++since_qr == reorth_every) {
            mgs_qr(Q, M, M, acc);
            since_qr = 0;
        }
    }
    if (since_qr > 0) mgs_qr(Q, M, M, acc);

    LyapunovReport rep;
    const double T = static_cast<double>(n_steps) * dt;
    rep.exponents.resize(M);
    for (std::size_t j = 0; j < M; ++j) rep.exponents[j] = acc[j] / T;
    std::sort(rep.exponents.begin(), rep.exponents.end(), std::greater<>());
    rep.sum_exponents = 0.0;
    for (double l : rep.exponents) rep.sum_exponents += l;
    rep.contraction_average = contraction_acc / static_cast<double>(n_steps);

    for (int e = 0; e < 3; ++e) {
        PairFit fit = pair_fit(rep.exponents, e, e == 0 ? &rep.pairing_residuals : nullptr);
        rep.center_by_exclusion[static_cast<std::size_t>(e)] = fit.center;
        rep.spread_by_exclusion[static_cast<std::size_t>(e)] = fit.spread;
    }
    rep.best_exclusion = 0;
    for (int e = 1; e < 3; ++e)
        if (rep.spread_by_exclusion[static_cast<std::size_t>(e)] <
            rep.spread_by_exclusion[static_cast<std::size_t>(rep.best_exclusion)])
            rep.best_exclusion = e;
    rep.pairing_center =
        rep.center_by_exclusion[static_cast<std::size_t>(rep.best_exclusion)];
    return rep;
}

} // namespace thermoeq
