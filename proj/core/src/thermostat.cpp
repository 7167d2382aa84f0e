#include "thermoeq/thermostat.hpp"

#include <string>

#include "thermoeq/errors.hpp"

namespace thermoeq {

namespace {

constexpr double kMomentumFloor = 1e-300;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double momentum_square(std::span<const double> p) {
    const double p2 = dot(p, p);
    if (p2 < kMomentumFloor)
        throw ZeroMomentumError("momentum square underflow: friction coefficient undefined");
    return p2;
}

} // namespace

std::string to_string(ThermostatKind kind) {
    switch (kind) {
        case ThermostatKind::Isokinetic: return "isokinetic";
        case ThermostatKind::Isoenergetic: return "isoenergetic";
        case ThermostatKind::Generalized: return "generalized";
        case ThermostatKind::ConstantAlpha: return "constant_alpha";
    }
    return "?";
}

ThermostatKind thermostat_kind_from_string(const std::string& name) {
    if (name == "isokinetic") return ThermostatKind::Isokinetic;
    if (name == "isoenergetic") return ThermostatKind::Isoenergetic;
    if (name == "generalized") return ThermostatKind::Generalized;
    if (name == "constant_alpha") return ThermostatKind::ConstantAlpha;
    throw ValidationError("unknown thermostat kind \"" + name + "\"");
}

void ThermostatMode::validate(const ForceFieldSpec& ffield) const {
    if (kind == ThermostatKind::ConstantAlpha && !(alpha_const > 0.0))
        throw ValidationError(
            "constant_alpha mode assumes alpha, m are constants > 0; got alpha_const = " +
            std::to_string(alpha_const));
    if (kind == ThermostatKind::Generalized && !ffield.auxiliary)
        throw ValidationError("generalized mode needs an auxiliary energy spec");
}

double alpha_isokinetic(std::span<const double> total_force, std::span<const double> p) {
    return dot(total_force, p) / momentum_square(p);
}

double alpha_isoenergetic(std::span<const double> xi, std::span<const double> p) {
    return dot(xi, p) / momentum_square(p);
}

double alpha_generalized(std::span<const double> grad_v, std::span<const double> grad_v_aux,
                         std::span<const double> xi, std::span<const double> p,
                         double mass, double mass_aux) {
    const double p2 = momentum_square(p);
    const double ratio = mass_aux / mass;
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
        s += (ratio * grad_v_aux[k] - grad_v[k] + xi[k]) * p[k];
    return s / p2;
}

double alpha_for(const ThermostatMode& mode, const PhasePoint& x, const ForceField& field) {
    switch (mode.kind) {
        case ThermostatKind::ConstantAlpha:
            return mode.alpha_const;
        case ThermostatKind::Isoenergetic: {
            const auto xi = field.driving_field();
            return alpha_isoenergetic(xi, x.p);
        }
        case ThermostatKind::Isokinetic: {
            std::vector<double> f;
            field.total_force(x.q, f);
            return alpha_isokinetic(f, x.p);
        }
        case ThermostatKind::Generalized: {
            std::vector<double> grad, grad_aux;
            field.potential_and_gradient(x.q, grad);
            field.auxiliary_potential_and_gradient(x.q, grad_aux);
            const auto xi = field.driving_field();
            return alpha_generalized(grad, grad_aux, xi, x.p,
                                     field.spec().mass, field.params().auxiliary->mass);
        }
    }
    throw Error("unreachable thermostat kind");
}

} // namespace thermoeq
