#include "thermoeq/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "thermoeq/errors.hpp"

namespace thermoeq {

using nlohmann::json;

namespace {

json spec_to_json(const SystemSpec& s) {
    return {{"wall_dims", s.wall_dims},
            {"torus_dims", s.torus_dims},
            {"box", s.box},
            {"particle_count", s.particle_count},
            {"mass", s.mass}};
}

SystemSpec spec_from_json(const json& j) {
    SystemSpec s;
    s.wall_dims = j.at("wall_dims").get<int>();
    s.torus_dims = j.at("torus_dims").get<int>();
    s.box = j.at("box").get<std::vector<double>>();
    s.particle_count = j.at("particle_count").get<int>();
    s.mass = j.at("mass").get<double>();
    return s;
}

json ffield_to_json(const ForceFieldSpec& f) {
    json j{{"pair_epsilon", f.pair_epsilon},
           {"pair_range", f.pair_range},
           {"xi", f.xi},
           {"gauge_shift", f.gauge_shift}};
    if (f.auxiliary)
        j["auxiliary"] = {{"mass", f.auxiliary->mass},
                          {"pair_epsilon", f.auxiliary->pair_epsilon},
                          {"pair_range", f.auxiliary->pair_range}};
    return j;
}

ForceFieldSpec ffield_from_json(const json& j) {
    ForceFieldSpec f;
    f.pair_epsilon = j.at("pair_epsilon").get<double>();
    f.pair_range = j.at("pair_range").get<double>();
    f.xi = j.at("xi").get<std::vector<double>>();
    f.gauge_shift = j.at("gauge_shift").get<std::vector<double>>();
    if (j.contains("auxiliary")) {
        AuxiliaryEnergySpec a;
        a.mass = j["auxiliary"].at("mass").get<double>();
        a.pair_epsilon = j["auxiliary"].at("pair_epsilon").get<double>();
        a.pair_range = j["auxiliary"].at("pair_range").get<double>();
        f.auxiliary = a;
    }
    return f;
}

} // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
    json j;
    j["format"] = "thermoeq-checkpoint";
    j["version"] = 1;
    j["spec"] = spec_to_json(c.spec);
    j["ffield"] = ffield_to_json(c.ffield);
    j["mode"] = {{"kind", to_string(c.mode.kind)}, {"alpha_const", c.mode.alpha_const}};
    j["cfg"] = {{"dt", c.cfg.dt},
                {"projection", c.cfg.projection},
                {"reflection_tol", c.cfg.reflection_tol},
                {"constraint_target", c.cfg.constraint_target},
                {"max_reflections", c.cfg.max_reflections}};
    j["step_index"] = c.step_index;
    j["seed"] = c.seed;
    j["state"] = {{"q", c.state.q}, {"p", c.state.p}};

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failure on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what(), 0);
    }
    if (j.value("format", "") != "thermoeq-checkpoint")
        throw ParseError(path + ": not a checkpoint file", 0);

    Checkpoint c;
    c.spec = spec_from_json(j.at("spec"));
    c.ffield = ffield_from_json(j.at("ffield"));
    c.mode.kind = thermostat_kind_from_string(j.at("mode").at("kind").get<std::string>());
    c.mode.alpha_const = j.at("mode").at("alpha_const").get<double>();
    c.cfg.dt = j.at("cfg").at("dt").get<double>();
    c.cfg.projection = j.at("cfg").at("projection").get<bool>();
    c.cfg.reflection_tol = j.at("cfg").at("reflection_tol").get<double>();
    c.cfg.constraint_target = j.at("cfg").at("constraint_target").get<double>();
    c.cfg.max_reflections = j.at("cfg").at("max_reflections").get<int>();
    c.step_index = j.at("step_index").get<long>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.state.q = j.at("state").at("q").get<std::vector<double>>();
    c.state.p = j.at("state").at("p").get<std::vector<double>>();
    return c;
}

} // namespace thermoeq
