#include "thermoeq/force_field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "thermoeq/errors.hpp"

namespace thermoeq {

namespace {

// particles above this count switch from the O(N^2) loop to cell lists
constexpr int kCellListThreshold = 64;

void check_field_size(const std::vector<double>& v, int dim, const char* name) {
    if (!v.empty() && static_cast<int>(v.size()) != dim)
        throw ValidationError(std::string(name) + " must have one component per dimension or be empty");
}

} // namespace

std::string to_string(DrivePattern pattern) {
    switch (pattern) {
        case DrivePattern::Uniform: return "uniform";
        case DrivePattern::Alternating: return "alternating";
    }
    return "?";
}

DrivePattern drive_pattern_from_string(const std::string& name) {
    if (name == "uniform") return DrivePattern::Uniform;
    if (name == "alternating") return DrivePattern::Alternating;
    throw ValidationError("unknown drive pattern \"" + name + "\"");
}

void ForceFieldSpec::validate(const SystemSpec& spec) const {
    if (!(pair_epsilon >= 0.0))
        throw ValidationError("pair_epsilon must be non-negative");
    if (!(pair_range > 0.0))
        throw ValidationError("pair_range must be positive");
    const double min_edge = *std::min_element(spec.box.begin(), spec.box.end());
    if (!(pair_range < 0.5 * min_edge))
        throw ValidationError("pair_range must be below half the smallest box edge "
                              "(no self-image interactions)");
    check_field_size(xi, spec.dim(), "xi");
    check_field_size(gauge_shift, spec.dim(), "gauge_shift");
    if (auxiliary) {
        if (!(auxiliary->mass > 0.0))
            throw ValidationError("auxiliary mass must be positive");
        if (!(auxiliary->pair_epsilon >= 0.0))
            throw ValidationError("auxiliary pair_epsilon must be non-negative");
        if (!(auxiliary->pair_range > 0.0) || !(auxiliary->pair_range < 0.5 * min_edge))
            throw ValidationError("auxiliary pair_range must lie in (0, min box edge / 2)");
    }
}

ForceField::ForceField(SystemSpec spec, ForceFieldSpec ffield)
    : spec_(std::move(spec)), ffield_(std::move(ffield)) {
    spec_.validate();
    ffield_.validate(spec_);

    const int d = spec_.dim();
    if (ffield_.xi.empty()) ffield_.xi.assign(d, 0.0);
    gauge_ = ffield_.gauge_shift.empty() ? std::vector<double>(d, 0.0) : ffield_.gauge_shift;
    alternating_ = ffield_.drive_pattern == DrivePattern::Alternating;

    drive_const_.resize(d);
    drive_const_alt_.resize(d);
    for (int k = 0; k < d; ++k) {
        drive_const_[k] = (ffield_.xi[k] + gauge_[k]) - gauge_[k];
        const double alt = alternating_ ? -ffield_.xi[k] : ffield_.xi[k];
        drive_const_alt_[k] = (alt + gauge_[k]) - gauge_[k];
    }
    drive_flat_.resize(static_cast<std::size_t>(spec_.particle_count) * d);
    for (int i = 0; i < spec_.particle_count; ++i)
        for (int k = 0; k < d; ++k)
            drive_flat_[static_cast<std::size_t>(i) * d + k] =
                drive_sign(i) * ffield_.xi[k] + gauge_[k];

    // cell geometry depends only on the box and the interaction range
    cells_per_dim_.resize(d);
    cell_width_.resize(d);
    cells_feasible_ = true;
    for (int k = 0; k < d; ++k) {
        int n = static_cast<int>(std::floor(spec_.box[k] / ffield_.pair_range));
        cells_per_dim_[k] = n;
        cell_width_[k] = n > 0 ? spec_.box[k] / n : spec_.box[k];
        const int min_cells = spec_.is_wall_dim(k) ? 1 : 3;
        if (n < min_cells) cells_feasible_ = false;
    }
    if (cells_feasible_) {
        cell_stride_.resize(d);
        int stride = 1;
        for (int k = d - 1; k >= 0; --k) {
            cell_stride_[k] = stride;
            stride *= cells_per_dim_[k];
        }
        total_cells_ = stride;
        cell_head_.resize(total_cells_);
        cell_next_.resize(spec_.particle_count);
    }
}

double ForceField::u_of_s(double s, double eps, double inv_rc2) {
    const double t = 1.0 - s * inv_rc2;
    const double t2 = t * t;
    return eps * t2 * t2;
}

double ForceField::du_ds(double s, double eps, double inv_rc2) {
    const double t = 1.0 - s * inv_rc2;
    return -4.0 * eps * inv_rc2 * t * t * t;
}

double ForceField::d2u_ds2(double s, double eps, double inv_rc2) {
    const double t = 1.0 - s * inv_rc2;
    return 12.0 * eps * inv_rc2 * inv_rc2 * t * t;
}

double ForceField::pair_potential(double r) const {
    const double rc = ffield_.pair_range;
    if (r >= rc) return 0.0;
    return u_of_s(r * r, ffield_.pair_epsilon, 1.0 / (rc * rc));
}

bool ForceField::cell_path_active() const {
    return cells_feasible_ && spec_.particle_count > kCellListThreshold;
}

bool ForceField::use_cells(PairPath path) const {
    switch (path) {
        case PairPath::DoubleLoop: return false;
        case PairPath::CellList:
            if (!cells_feasible_)
                throw ValidationError("cell-list sweep infeasible: box too small for 3 cells "
                                      "per periodic dimension at this interaction range");
            return true;
        case PairPath::Auto: default: return cell_path_active();
    }
}

double ForceField::accumulate_pairs(const std::vector<double>& q, std::vector<double>* grad,
                                    double eps, double rc, bool cells) const {
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
    if (eps == 0.0) return 0.0;
    return cells ? sweep_cell_list(q, grad, eps, rc)
                 : sweep_double_loop(q, grad, eps, rc);
}

double ForceField::sweep_double_loop(const std::vector<double>& q, std::vector<double>* grad,
                                     double eps, double rc) const {
    const int n = spec_.particle_count;
    const int d = spec_.dim();
    const int w = spec_.wall_dims;
    const double rc2 = rc * rc;
    const double inv_rc2 = 1.0 / rc2;
    double dq[8];
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
        const double* qi = q.data() + static_cast<std::size_t>(i) * d;
        for (int j = i + 1; j < n; ++j) {
            const double* qj = q.data() + static_cast<std::size_t>(j) * d;
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                double c = qi[k] - qj[k];
                if (k >= w) c = minimum_image_1d(c, spec_.box[k]);
                dq[k] = c;
                s += c * c;
            }
            if (s >= rc2) continue;
            v += u_of_s(s, eps, inv_rc2);
            if (grad) {
                const double g = 2.0 * du_ds(s, eps, inv_rc2);
                double* gi = grad->data() + static_cast<std::size_t>(i) * d;
                double* gj = grad->data() + static_cast<std::size_t>(j) * d;
                for (int k = 0; k < d; ++k) {
                    const double gk = g * dq[k];
                    gi[k] += gk;
                    gj[k] -= gk;
                }
            }
        }
    }
    return v;
}

void ForceField::build_cells(const std::vector<double>& q) const {
    const int n = spec_.particle_count;
    const int d = spec_.dim();
    std::fill(cell_head_.begin(), cell_head_.end(), -1);
    // filled back to front so each cell's chain walks in ascending particle index
    for (int i = n - 1; i >= 0; --i) {
        int cell = 0;
        for (int k = 0; k < d; ++k) {
            double c = q[static_cast<std::size_t>(i) * d + k];
            if (!spec_.is_wall_dim(k)) {
                c = std::fmod(c, spec_.box[k]);
                if (c < 0.0) c += spec_.box[k];
            }
            int ck = static_cast<int>(std::floor(c / cell_width_[k]));
            ck = std::clamp(ck, 0, cells_per_dim_[k] - 1);
            cell += ck * cell_stride_[k];
        }
        cell_next_[i] = cell_head_[cell];
        cell_head_[cell] = i;
    }
}

double ForceField::sweep_cell_list(const std::vector<double>& q, std::vector<double>* grad,
                                   double eps, double rc) const {
    const int n = spec_.particle_count;
    const int d = spec_.dim();
    const int w = spec_.wall_dims;
    const double rc2 = rc * rc;
    const double inv_rc2 = 1.0 / rc2;
    build_cells(q);

    double dq[8];
    int coord[8], nb[8];
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
        const double* qi = q.data() + static_cast<std::size_t>(i) * d;
        // locate i's cell coordinates
        for (int k = 0; k < d; ++k) {
            double c = qi[k];
            if (!spec_.is_wall_dim(k)) {
                c = std::fmod(c, spec_.box[k]);
                if (c < 0.0) c += spec_.box[k];
            }
            int ck = static_cast<int>(std::floor(c / cell_width_[k]));
            coord[k] = std::clamp(ck, 0, cells_per_dim_[k] - 1);
        }

        // gather candidate neighbors from the 3^d surrounding cells, then sort so
        // the per-particle accumulation order is independent of the cell layout
        neighbor_scratch_.clear();
        int offset[8];
        for (int k = 0; k < d; ++k) offset[k] = -1;
        for (;;) {
            bool valid = true;
            int cell = 0;
            for (int k = 0; k < d; ++k) {
                int ck = coord[k] + offset[k];
                if (spec_.is_wall_dim(k)) {
                    if (ck < 0 || ck >= cells_per_dim_[k]) { valid = false; break; }
                } else {
                    if (ck < 0) ck += cells_per_dim_[k];
                    else if (ck >= cells_per_dim_[k]) ck -= cells_per_dim_[k];
                }
                nb[k] = ck;
                cell += ck * cell_stride_[k];
            }
            if (valid)
                for (int j = cell_head_[cell]; j >= 0; j = cell_next_[j])
                    if (j != i) neighbor_scratch_.push_back(j);
            // advance the offset tuple
            int k = d - 1;
            while (k >= 0) {
                if (++offset[k] <= 1) break;
                offset[k] = -1;
                --k;
            }
            if (k < 0) break;
        }
        std::sort(neighbor_scratch_.begin(), neighbor_scratch_.end());

        double* gi = grad ? grad->data() + static_cast<std::size_t>(i) * d : nullptr;
        for (int j : neighbor_scratch_) {
            const double* qj = q.data() + static_cast<std::size_t>(j) * d;
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                double c = qi[k] - qj[k];
                if (k >= w) c = minimum_image_1d(c, spec_.box[k]);
                dq[k] = c;
                s += c * c;
            }
            if (s >= rc2) continue;
            v += 0.5 * u_of_s(s, eps, inv_rc2);  // every pair visited from both ends
            if (gi) {
                const double g = 2.0 * du_ds(s, eps, inv_rc2);
                for (int k = 0; k < d; ++k) gi[k] += g * dq[k];
            }
        }
    }
    return v;
}

double ForceField::potential_and_gradient(const std::vector<double>& q,
                                          std::vector<double>& grad_out, PairPath path) const {
    const int d = spec_.dim();
    grad_out.resize(q.size());
    double v = accumulate_pairs(q, &grad_out, ffield_.pair_epsilon, ffield_.pair_range,
                                use_cells(path));
    bool has_gauge = false;
    for (double g : gauge_)
        if (g != 0.0) has_gauge = true;
    if (has_gauge) {
        for (int i = 0; i < spec_.particle_count; ++i)
            for (int k = 0; k < d; ++k) {
                v += gauge_[k] * q[static_cast<std::size_t>(i) * d + k];
                grad_out[static_cast<std::size_t>(i) * d + k] += gauge_[k];
            }
    }
    return v;
}

double ForceField::potential_energy(const std::vector<double>& q, PairPath path) const {
    double v = accumulate_pairs(q, nullptr, ffield_.pair_epsilon, ffield_.pair_range,
                                use_cells(path));
    const int d = spec_.dim();
    for (int k = 0; k < d; ++k) {
        if (gauge_[k] == 0.0) continue;
        for (int i = 0; i < spec_.particle_count; ++i)
            v += gauge_[k] * q[static_cast<std::size_t>(i) * d + k];
    }
    return v;
}

std::vector<double> ForceField::potential_gradient(const std::vector<double>& q,
                                                   PairPath path) const {
    std::vector<double> grad;
    potential_and_gradient(q, grad, path);
    return grad;
}

double ForceField::total_force(const std::vector<double>& q, std::vector<double>& force_out,
                               PairPath path) const {
    const int d = spec_.dim();
    force_out.resize(q.size());
    double v = accumulate_pairs(q, &force_out, ffield_.pair_epsilon, ffield_.pair_range,
                                use_cells(path));
    for (int i = 0; i < spec_.particle_count; ++i) {
        const double* dc = (alternating_ && (i & 1)) ? drive_const_alt_.data()
                                                     : drive_const_.data();
        for (int k = 0; k < d; ++k) {
            double& f = force_out[static_cast<std::size_t>(i) * d + k];
            f = dc[k] - f;
        }
    }
    for (int k = 0; k < d; ++k) {
        if (gauge_[k] == 0.0) continue;
        for (int i = 0; i < spec_.particle_count; ++i)
            v += gauge_[k] * q[static_cast<std::size_t>(i) * d + k];
    }
    return v;
}

DenseMatrix ForceField::potential_hessian(const std::vector<double>& q) const {
    const int n = spec_.particle_count;
    const int d = spec_.dim();
    const int w = spec_.wall_dims;
    const double rc = ffield_.pair_range;
    const double rc2 = rc * rc;
    const double inv_rc2 = 1.0 / rc2;
    const double eps = ffield_.pair_epsilon;
    DenseMatrix h(n * d, n * d);
    if (eps == 0.0) return h;

    double dq[8];
    for (int i = 0; i < n; ++i) {
        const double* qi = q.data() + static_cast<std::size_t>(i) * d;
        for (int j = i + 1; j < n; ++j) {
            const double* qj = q.data() + static_cast<std::size_t>(j) * d;
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                double c = qi[k] - qj[k];
                if (k >= w) c = minimum_image_1d(c, spec_.box[k]);
                dq[k] = c;
                s += c * c;
            }
            if (s >= rc2) continue;
            const double g1 = 2.0 * du_ds(s, eps, inv_rc2);
            const double g2 = 4.0 * d2u_ds2(s, eps, inv_rc2);
            // block B_ab = g1 delta_ab + g2 dq_a dq_b enters ii and jj with +, ij and ji
            // with -; each symmetric entry pair is computed once so H is symmetric to
            // the last bit
            for (int a = 0; a < d; ++a)
                for (int b = a; b < d; ++b) {
                    const double blk = (a == b ? g1 : 0.0) + g2 * (dq[a] * dq[b]);
                    h(i * d + a, i * d + b) += blk;
                    h(j * d + a, j * d + b) += blk;
                    h(i * d + a, j * d + b) -= blk;
                    h(j * d + a, i * d + b) -= blk;
                    if (a != b) {
                        h(i * d + b, i * d + a) += blk;
                        h(j * d + b, j * d + a) += blk;
                        h(i * d + b, j * d + a) -= blk;
                        h(j * d + b, i * d + a) -= blk;
                    }
                }
        }
    }
    return h;
}

double ForceField::auxiliary_potential_and_gradient(const std::vector<double>& q,
                                                    std::vector<double>& grad_out) const {
    if (!ffield_.auxiliary)
        throw ValidationError("no auxiliary energy configured for this force field");
    grad_out.resize(q.size());
    return accumulate_pairs(q, &grad_out, ffield_.auxiliary->pair_epsilon,
                            ffield_.auxiliary->pair_range, false);
}

double ForceField::kinetic_energy(const std::vector<double>& p) const {
    double s = 0.0;
    for (double c : p) s += c * c;
    return s / (2.0 * spec_.mass);
}

EnergyReport ForceField::energy_report(const PhasePoint& x) const {
    EnergyReport rep;
    rep.kinetic = kinetic_energy(x.p);
    rep.potential = potential_energy(x.q);
    rep.total = rep.kinetic + rep.potential;
    return rep;
}

} // namespace thermoeq
