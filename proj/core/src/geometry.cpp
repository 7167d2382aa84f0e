#include "thermoeq/geometry.hpp"

#include <cmath>
#include <string>

#include "thermoeq/errors.hpp"

namespace thermoeq {

double SystemSpec::volume() const {
    double v = 1.0;
    for (double l : box) v *= l;
    return v;
}

void SystemSpec::validate() const {
    if (wall_dims < 0 || torus_dims < 0)
        throw ValidationError("wall_dims and torus_dims must be non-negative");
    if (dim() < 1)
        throw ValidationError("need at least one spatial dimension");
    if (dim() > 8)
        throw ValidationError("at most 8 spatial dimensions supported");
    if (static_cast<int>(box.size()) != dim())
        throw ValidationError("box needs one edge length per dimension: expected " +
                              std::to_string(dim()) + ", got " + std::to_string(box.size()));
    for (double l : box)
        if (!(l > 0.0))
            throw ValidationError("box edge lengths must be positive");
    if (particle_count < 1)
        throw ValidationError("particle_count must be at least 1");
    if (!(mass > 0.0))
        throw ValidationError("mass must be positive");
}

static double wrap_1d(double q, double box_len) {
    double w = std::fmod(q, box_len);
    if (w < 0.0) w += box_len;
    // fmod is exact, but the += above can round w up to exactly box_len
    if (w >= box_len) w = 0.0;
    return w;
}

void wrap_torus_inplace(std::vector<double>& q, const SystemSpec& spec) {
    const int d = spec.dim();
    for (int i = 0; i < spec.particle_count; ++i)
        for (int k = spec.wall_dims; k < d; ++k) {
            double& c = q[static_cast<std::size_t>(i) * d + k];
            if (c < 0.0 || c >= spec.box[k]) c = wrap_1d(c, spec.box[k]);
        }
}

std::vector<double> wrap_torus(const std::vector<double>& q, const SystemSpec& spec) {
    std::vector<double> out = q;
    wrap_torus_inplace(out, spec);
    return out;
}

std::vector<double> minimum_image(const std::vector<double>& dq, const SystemSpec& spec) {
    std::vector<double> out = dq;
    for (int k = spec.wall_dims; k < spec.dim(); ++k)
        out[k] = minimum_image_1d(out[k], spec.box[k]);
    return out;
}

std::vector<double> reflect(const std::vector<double>& p, const std::vector<double>& normal) {
    double pn = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) pn += p[k] * normal[k];
    std::vector<double> out = p;
    for (std::size_t k = 0; k < p.size(); ++k) out[k] -= 2.0 * pn * normal[k];
    return out;
}

} // namespace thermoeq
