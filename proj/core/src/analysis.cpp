#include "thermoeq/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "thermoeq/errors.hpp"

namespace thermoeq {

namespace {

double mean_of(const double* xs, long n) {
    double s = 0.0;
    for (long i = 0; i < n; ++i) s += xs[i];
    return s / static_cast<double>(n);
}

double stddev_of(const double* xs, long n, double mean) {
    if (n < 2) return 0.0;
    double s = 0.0;
    for (long i = 0; i < n; ++i) {
        const double d = xs[i] - mean;
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(n - 1));
}

} // namespace

BlockStats block_average(const std::vector<double>& series, long n_blocks) {
    if (n_blocks < 4) throw ValidationError("block_average needs at least 4 blocks");
    const long n = static_cast<long>(series.size());
    if (n < 4 * n_blocks)
        throw TooShortError("series of length " + std::to_string(n) +
                            " cannot fill " + std::to_string(n_blocks) +
                            " blocks of at least 4 points");
    BlockStats out;
    out.n_blocks = n_blocks;
    out.block_len = n / n_blocks;
    const long used = out.n_blocks * out.block_len;
    const double* tail = series.data() + (n - used);

    std::vector<double> bm(static_cast<std::size_t>(n_blocks));
    for (long b = 0; b < n_blocks; ++b)
        bm[static_cast<std::size_t>(b)] = mean_of(tail + b * out.block_len, out.block_len);
    out.mean = mean_of(bm.data(), n_blocks);
    out.std_error = stddev_of(bm.data(), n_blocks, out.mean) /
                    std::sqrt(static_cast<double>(n_blocks));
    return out;
}

std::vector<double> column(const std::vector<ObservableRecord>& recs,
                           double ObservableRecord::*field) {
    std::vector<double> out;
    out.reserve(recs.size());
    for (const auto& r : recs) out.push_back(r.*field);
    return out;
}

long steady_start(const std::vector<double>& series) {
    const long n = static_cast<long>(series.size());
    const long cut = n / 5;
    const long m = n - cut;
    if (m < 32) throw TooShortError("steady-state segment too short to test for drift");
    const double* xs = series.data() + cut;

    BlockStats bs = block_average(std::vector<double>(xs, xs + m));
    const long three_q = (3 * m) / 4;
    const double m_three_q = mean_of(xs, three_q);
    const double m_full = mean_of(xs, m);
    const double sigma = bs.std_error;
    if (std::abs(m_full - m_three_q) > std::max(sigma, 1e-300))
        throw TransientNotEndedError(
            "cumulative mean still drifting after the discarded fifth (moved " +
            std::to_string(std::abs(m_full - m_three_q)) + ", allowed " +
            std::to_string(sigma) + ")");
    return cut;
}

FrictionEstimates volume_averaged_alphas(const std::vector<ObservableRecord>& recs,
                                         const SystemSpec& spec,
                                         const ForceFieldSpec& ffield,
                                         long n_blocks) {
    for (double g : ffield.gauge_shift)
        if (g != 0.0)
            throw ValidationError(
                "volume-averaged friction estimators assume an ungauged drive");

    const double m = spec.mass;
    const double n = static_cast<double>(spec.particle_count);
    double xi2 = 0.0;
    for (double c : ffield.xi) xi2 += c * c;
    const double vol = spec.volume();

    // reconstruct the extensive series from the recorded columns:
    //   xi.p = N m |xi|^2 J,  p^2 = 2 m K,  gradV.p = m stat
    const std::size_t len = recs.size();
    std::vector<double> drive(len), grad(len), psq(len);
    for (std::size_t i = 0; i < len; ++i) {
        drive[i] = n * m * xi2 * recs[i].current;
        grad[i] = m * recs[i].stationarity;
        psq[i] = 2.0 * m * recs[i].kinetic;
    }

    FrictionEstimates out;
    BlockStats bd = block_average(drive, n_blocks);
    BlockStats bg = block_average(grad, n_blocks);
    BlockStats bp = block_average(psq, n_blocks);
    out.drive_power_density = bd.mean / vol;
    out.gradient_power_density = bg.mean / vol;
    out.momentum_square_density = bp.mean / vol;

    out.isoenergetic.mean = bd.mean / bp.mean;
    out.isokinetic.mean = (bd.mean - bg.mean) / bp.mean;
    out.isoenergetic.n_blocks = out.isokinetic.n_blocks = bd.n_blocks;
    out.isoenergetic.block_len = out.isokinetic.block_len = bd.block_len;

    // error bars from per-block ratios
    const long nb = bd.n_blocks, bl = bd.block_len;
    const long used = nb * bl;
    const double* td = drive.data() + (static_cast<long>(len) - used);
    const double* tg = grad.data() + (static_cast<long>(len) - used);
    const double* tp = psq.data() + (static_cast<long>(len) - used);
    std::vector<double> rik(static_cast<std::size_t>(nb)), rie(static_cast<std::size_t>(nb));
    for (long b = 0; b < nb; ++b) {
        const double d = mean_of(td + b * bl, bl);
        const double g = mean_of(tg + b * bl, bl);
        const double p = mean_of(tp + b * bl, bl);
        rie[static_cast<std::size_t>(b)] = d / p;
        rik[static_cast<std::size_t>(b)] = (d - g) / p;
    }
    const double mie = mean_of(rie.data(), nb);
    const double mik = mean_of(rik.data(), nb);
    out.isoenergetic.std_error =
        stddev_of(rie.data(), nb, mie) / std::sqrt(static_cast<double>(nb));
    out.isokinetic.std_error =
        stddev_of(rik.data(), nb, mik) / std::sqrt(static_cast<double>(nb));
    return out;
}

BlockStats stationarity_residual(const std::vector<ObservableRecord>& recs,
                                 long n_blocks) {
    return block_average(column(recs, &ObservableRecord::stationarity), n_blocks);
}

PropositionReport check_proposition(const std::vector<ObservableRecord>& recs,
                                    const SystemSpec& spec,
                                    const ForceFieldSpec& ffield,
                                    const ThermostatMode& mode) {
    if (mode.kind != ThermostatKind::ConstantAlpha || mode.alpha_const <= 0.0)
        throw ValidationError("confinement bounds apply to constant positive friction");
    const double alpha = mode.alpha_const;
    const double m = spec.mass;
    const double n = static_cast<double>(spec.particle_count);

    // bounds from the bare decomposition: the gauge moves identical terms
    // between the drive and the potential, the flow does not change
    double xi2 = 0.0;
    for (double c : ffield.xi) xi2 += c * c;
    const double max_xi2 = n * xi2;
    const double max_v = ffield.pair_epsilon * n * (n - 1.0) / 2.0;
    const double min_v = 0.0;

    PropositionReport rep;
    rep.bound5_rhs = max_xi2 / (2.0 * m * alpha * alpha) + max_v;
    rep.bound6_rhs = max_xi2 / (alpha * alpha) + 2.0 * m * (max_v - min_v);
    rep.descent_margin = 0.1 * rep.bound5_rhs;

    const long len = static_cast<long>(recs.size());
    if (len < 64) throw TooShortError("confinement check needs a longer record series");
    std::vector<double> h(static_cast<std::size_t>(len)), p2(static_cast<std::size_t>(len));
    for (long i = 0; i < len; ++i) {
        h[static_cast<std::size_t>(i)] = recs[static_cast<std::size_t>(i)].total_energy;
        p2[static_cast<std::size_t>(i)] =
            2.0 * m * recs[static_cast<std::size_t>(i)].kinetic;
    }

    // fluctuation scale read off the final quarter, where the trajectory is
    // expected to orbit inside the trap
    const long q = len - len / 4;
    const double h_qmean = mean_of(h.data() + q, len - q);
    const double p_qmean = mean_of(p2.data() + q, len - q);
    rep.tol_energy = 1e-6 + 3.0 * stddev_of(h.data() + q, len - q, h_qmean);
    rep.tol_p2 = 1e-6 + 3.0 * stddev_of(p2.data() + q, len - q, p_qmean);

    for (long i = 0; i < len; ++i)
        if (h[static_cast<std::size_t>(i)] <= rep.bound5_rhs + rep.tol_energy) {
            rep.first_confined_index = i;
            rep.first_confined_time = recs[static_cast<std::size_t>(i)].t;
            break;
        }
    if (rep.first_confined_index < 0)
        throw TransientNotEndedError("trajectory never entered the confinement bound");

    // strict descent while above the margin
    rep.descent_verified = true;
    for (long i = 0; i + 1 < len; ++i)
        if (h[static_cast<std::size_t>(i)] >= rep.bound5_rhs + rep.descent_margin &&
            !(h[static_cast<std::size_t>(i + 1)] < h[static_cast<std::size_t>(i)])) {
            rep.descent_verified = false;
            break;
        }

    const long s = rep.first_confined_index;
    rep.post_transient_max_H_like = *std::max_element(h.begin() + s, h.end());
    rep.post_transient_max_p2 = *std::max_element(p2.begin() + s, p2.end());
    rep.energy_bound_holds =
        rep.post_transient_max_H_like <= rep.bound5_rhs + rep.tol_energy;
    rep.p2_bound_holds = rep.post_transient_max_p2 <= rep.bound6_rhs + rep.tol_p2;

    // vanishing averages of Phi(K) (xi.p - alpha p^2) over the trapped segment;
    // the second factor is m * heat_rate
    const long seg = len - s;
    std::vector<double> g(static_cast<std::size_t>(seg));
    for (int phi = 0; phi < 3; ++phi) {
        for (long i = 0; i < seg; ++i) {
            const auto& r = recs[static_cast<std::size_t>(s + i)];
            double w = m * r.heat_rate;
            for (int pw = 0; pw < phi; ++pw) w *= r.kinetic;
            g[static_cast<std::size_t>(i)] = w;
        }
        rep.identity7_values[static_cast<std::size_t>(phi)] = block_average(g);
        const double a_quarter = std::abs(mean_of(g.data(), std::max<long>(seg / 4, 1)));
        const double a_full = std::abs(mean_of(g.data(), seg));
        rep.identity7_decay[static_cast<std::size_t>(phi)] =
            a_full > 0.0 ? a_quarter / a_full
                         : std::numeric_limits<double>::infinity();
    }
    return rep;
}

} // namespace thermoeq
