#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace thermoeq {

// Container geometry: the first `wall_dims` coordinates live in a box [0, L_k]
// with elastic walls, the remaining `torus_dims` coordinates are periodic.
// Particle data is stored flat and particle-major: q[i*dim() + k].
struct SystemSpec {
    int wall_dims = 0;
    int torus_dims = 2;
    std::vector<double> box;  // edge length per dimension, wall dims first
    int particle_count = 1;
    double mass = 1.0;

    int dim() const { return wall_dims + torus_dims; }
    int dof() const { return particle_count * dim(); }
    bool is_wall_dim(int k) const { return k < wall_dims; }

    double volume() const;

    /// throws ValidationError unless all documented invariants hold
    void validate() const;
};

struct PhasePoint {
    std::vector<double> q;
    std::vector<double> p;
};

/// Wrap every torus coordinate into [0, L); wall coordinates pass through.
std::vector<double> wrap_torus(const std::vector<double>& q, const SystemSpec& spec);
void wrap_torus_inplace(std::vector<double>& q, const SystemSpec& spec);

/// Minimum-image reduction of a single-pair displacement (length dim()).
/// Torus components map into (-L/2, L/2], wall components are untouched.
std::vector<double> minimum_image(const std::vector<double>& dq, const SystemSpec& spec);

/// Scalar helper for one torus component.
inline double minimum_image_1d(double dq, double box_len) {
    // ceil keeps the tie dq = L/2 on the positive side
    double w = dq - box_len * std::ceil(dq / box_len - 0.5);
    return w;
}

/// Elastic reflection of a momentum vector off a wall with unit normal n.
std::vector<double> reflect(const std::vector<double>& p, const std::vector<double>& normal);

} // namespace thermoeq
