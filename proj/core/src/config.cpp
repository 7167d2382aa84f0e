#include "thermoeq/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "thermoeq/errors.hpp"

namespace thermoeq {

namespace {

struct Entry {
    std::string value;
    int line = 0;
};

// section -> key -> raw value; duplicate keys rejected at collection time
using EntryMap = std::map<std::string, std::map<std::string, Entry>>;

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"system", {"u", "v", "box", "N", "m"}},
        {"forces", {"eps", "rc", "xi", "gauge_shift", "drive"}},
        {"thermostat", {"kind", "alpha_const", "mtilde", "eps_tilde", "rc_tilde"}},
        {"integrator", {"dt", "steps", "record_every", "projection"}},
        {"study", {"sizes", "density", "h0", "seeds", "steps", "transient_fraction"}},
    };
    return s;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ParseError("config line " + std::to_string(line) + ": " + msg, line);
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

EntryMap collect(const std::string& text) {
    EntryMap entries;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::size_t cut = raw.find_first_of("#;");
        std::string s = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(line, "unterminated section header '" + s + "'");
            section = trim(s.substr(1, s.size() - 2));
            if (!schema().count(section))
                fail(line, "unknown section [" + section + "]");
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) fail(line, "expected 'key = value', got '" + s + "'");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (!valid_name(key)) fail(line, "malformed key '" + key + "'");
        if (section.empty()) fail(line, "key '" + key + "' appears before any section header");
        if (!schema().at(section).count(key))
            fail(line, "unknown key '" + key + "' in section [" + section + "]");
        if (value.empty()) fail(line, "empty value for key '" + key + "'");
        auto [it, fresh] = entries[section].emplace(key, Entry{value, line});
        if (!fresh)
            fail(line, "duplicate key '" + key + "' in section [" + section +
                           "] (first set on line " + std::to_string(it->second.line) + ")");
    }
    return entries;
}

double to_double(const Entry& e, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(e.value.c_str(), &end);
    if (end == e.value.c_str() || *end != '\0' || errno == ERANGE)
        fail(e.line, "malformed numeric value '" + e.value + "' for key '" + key + "'");
    return v;
}

long to_long(const Entry& e, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(e.value.c_str(), &end, 10);
    if (end == e.value.c_str() || *end != '\0' || errno == ERANGE)
        fail(e.line, "malformed integer value '" + e.value + "' for key '" + key + "'");
    return static_cast<long>(v);
}

bool to_bool(const Entry& e, const std::string& key) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    fail(e.line, "key '" + key + "' wants 'true' or 'false', got '" + e.value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::string s = value;
    for (char& c : s)
        if (c == ',') c = ' ';
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::vector<double> to_double_list(const Entry& e, const std::string& key) {
    std::vector<double> out;
    for (const std::string& tok : split_list(e.value))
        out.push_back(to_double(Entry{tok, e.line}, key));
    if (out.empty()) fail(e.line, "empty list for key '" + key + "'");
    return out;
}

std::vector<int> to_int_list(const Entry& e, const std::string& key) {
    std::vector<int> out;
    for (const std::string& tok : split_list(e.value))
        out.push_back(static_cast<int>(to_long(Entry{tok, e.line}, key)));
    if (out.empty()) fail(e.line, "empty list for key '" + key + "'");
    return out;
}

/// fetch helper: apply fn to the entry when present
template <typename Fn>
void with(const EntryMap& em, const std::string& sec, const std::string& key, Fn&& fn) {
    auto s = em.find(sec);
    if (s == em.end()) return;
    auto k = s->second.find(key);
    if (k == s->second.end()) return;
    fn(k->second);
}

bool has(const EntryMap& em, const std::string& sec, const std::string& key) {
    auto s = em.find(sec);
    return s != em.end() && s->second.count(key) > 0;
}

/// scalar -> first axis, zeros elsewhere; full-length lists pass through
std::vector<double> broadcast_axis(std::vector<double> v, int dim, int line,
                                   const std::string& key) {
    if (static_cast<int>(v.size()) == 1 && dim > 1) {
        v.resize(static_cast<std::size_t>(dim), 0.0);
        return v;
    }
    if (static_cast<int>(v.size()) != dim)
        fail(line, "key '" + key + "' wants 1 or " + std::to_string(dim) +
                       " entries, got " + std::to_string(v.size()));
    return v;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void put(std::string& out, const std::string& key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
}

} // namespace

void StudyParams::validate() const {
    if (sizes.empty()) throw ValidationError("study sizes must be non-empty");
    for (int n : sizes)
        if (n < 1) throw ValidationError("study sizes must be positive particle counts");
    if (!(density > 0.0)) throw ValidationError("study density must be positive");
    if (!(h0 > 0.0)) throw ValidationError("study h0 must be positive");
    if (seeds < 1) throw ValidationError("study needs at least one seed");
    if (steps < 1) throw ValidationError("study steps must be positive");
    if (!(transient_fraction >= 0.0) || !(transient_fraction < 1.0))
        throw ValidationError("study transient_fraction must lie in [0, 1)");
}

void RunConfig::validate() const {
    system.validate();
    forces.validate(system);
    thermostat.validate(forces);
    integrator.validate();
    if (steps < 1) throw ValidationError("steps must be positive");
    if (record_every < 1) throw ValidationError("record_every must be positive");
    study.validate();
}

RunConfig parse_config_text(const std::string& text) {
    const EntryMap em = collect(text);
    RunConfig cfg;

    with(em, "system", "u", [&](const Entry& e) {
        cfg.system.wall_dims = static_cast<int>(to_long(e, "u"));
    });
    with(em, "system", "v", [&](const Entry& e) {
        cfg.system.torus_dims = static_cast<int>(to_long(e, "v"));
    });
    with(em, "system", "N", [&](const Entry& e) {
        cfg.system.particle_count = static_cast<int>(to_long(e, "N"));
    });
    with(em, "system", "m",
         [&](const Entry& e) { cfg.system.mass = to_double(e, "m"); });

    with(em, "study", "sizes",
         [&](const Entry& e) { cfg.study.sizes = to_int_list(e, "sizes"); });
    with(em, "study", "density",
         [&](const Entry& e) { cfg.study.density = to_double(e, "density"); });
    with(em, "study", "h0", [&](const Entry& e) { cfg.study.h0 = to_double(e, "h0"); });
    with(em, "study", "seeds", [&](const Entry& e) {
        cfg.study.seeds = static_cast<int>(to_long(e, "seeds"));
    });
    with(em, "study", "transient_fraction", [&](const Entry& e) {
        cfg.study.transient_fraction = to_double(e, "transient_fraction");
    });

    const int dim = cfg.system.dim();
    with(em, "system", "box",
         [&](const Entry& e) { cfg.system.box = to_double_list(e, "box"); });
    if (!has(em, "system", "box") && dim > 0 && cfg.study.density > 0.0 &&
        cfg.system.particle_count > 0) {
        const double edge =
            std::pow(cfg.system.particle_count / cfg.study.density, 1.0 / dim);
        cfg.system.box.assign(static_cast<std::size_t>(dim), edge);
    }

    with(em, "forces", "eps",
         [&](const Entry& e) { cfg.forces.pair_epsilon = to_double(e, "eps"); });
    with(em, "forces", "rc",
         [&](const Entry& e) { cfg.forces.pair_range = to_double(e, "rc"); });
    cfg.forces.xi.assign(static_cast<std::size_t>(std::max(dim, 1)), 0.0);
    cfg.forces.xi[0] = 0.5;
    with(em, "forces", "xi", [&](const Entry& e) {
        cfg.forces.xi = broadcast_axis(to_double_list(e, "xi"), dim, e.line, "xi");
    });
    with(em, "forces", "drive", [&](const Entry& e) {
        try {
            cfg.forces.drive_pattern = drive_pattern_from_string(e.value);
        } catch (const ValidationError&) {
            fail(e.line, "drive must be 'uniform' or 'alternating', got '" + e.value + "'");
        }
    });
    cfg.forces.gauge_shift.assign(static_cast<std::size_t>(std::max(dim, 1)), 0.0);
    with(em, "forces", "gauge_shift", [&](const Entry& e) {
        cfg.forces.gauge_shift =
            broadcast_axis(to_double_list(e, "gauge_shift"), dim, e.line, "gauge_shift");
    });

    with(em, "thermostat", "kind", [&](const Entry& e) {
        try {
            cfg.thermostat.kind = thermostat_kind_from_string(e.value);
        } catch (const Error& err) {
            fail(e.line, err.what());
        }
    });
    with(em, "thermostat", "alpha_const", [&](const Entry& e) {
        cfg.thermostat.alpha_const = to_double(e, "alpha_const");
    });
    const bool wants_aux = cfg.thermostat.kind == ThermostatKind::Generalized ||
                           has(em, "thermostat", "mtilde") ||
                           has(em, "thermostat", "eps_tilde") ||
                           has(em, "thermostat", "rc_tilde");
    if (wants_aux) {
        AuxiliaryEnergySpec aux;
        aux.pair_epsilon = cfg.forces.pair_epsilon;
        aux.pair_range = cfg.forces.pair_range;
        with(em, "thermostat", "mtilde",
             [&](const Entry& e) { aux.mass = to_double(e, "mtilde"); });
        with(em, "thermostat", "eps_tilde",
             [&](const Entry& e) { aux.pair_epsilon = to_double(e, "eps_tilde"); });
        with(em, "thermostat", "rc_tilde",
             [&](const Entry& e) { aux.pair_range = to_double(e, "rc_tilde"); });
        cfg.forces.auxiliary = aux;
    }

    with(em, "integrator", "dt",
         [&](const Entry& e) { cfg.integrator.dt = to_double(e, "dt"); });
    with(em, "integrator", "steps",
         [&](const Entry& e) { cfg.steps = to_long(e, "steps"); });
    with(em, "integrator", "record_every",
         [&](const Entry& e) { cfg.record_every = to_long(e, "record_every"); });
    with(em, "integrator", "projection",
         [&](const Entry& e) { cfg.integrator.projection = to_bool(e, "projection"); });

    if (has(em, "study", "steps")) {
        with(em, "study", "steps",
             [&](const Entry& e) { cfg.study.steps = to_long(e, "steps"); });
    } else {
        cfg.study.steps = cfg.steps;
    }

    cfg.integrator.constraint_target = cfg.constraint_target();

    cfg.validate();
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure on config file: " + path);
    return parse_config_text(buf.str());
}

std::string canonical_config_string(const RunConfig& cfg) {
    std::string out;
    put(out, "u", std::to_string(cfg.system.wall_dims));
    put(out, "v", std::to_string(cfg.system.torus_dims));
    std::string box;
    for (double b : cfg.system.box) {
        if (!box.empty()) box += ' ';
        box += fmt(b);
    }
    put(out, "box", box);
    put(out, "N", std::to_string(cfg.system.particle_count));
    put(out, "m", fmt(cfg.system.mass));

    put(out, "eps", fmt(cfg.forces.pair_epsilon));
    put(out, "rc", fmt(cfg.forces.pair_range));
    std::string xi, gauge;
    for (double x : cfg.forces.xi) {
        if (!xi.empty()) xi += ' ';
        xi += fmt(x);
    }
    for (double g : cfg.forces.gauge_shift) {
        if (!gauge.empty()) gauge += ' ';
        gauge += fmt(g);
    }
    put(out, "xi", xi);
    put(out, "gauge_shift", gauge);
    put(out, "drive", to_string(cfg.forces.drive_pattern));
    if (cfg.forces.auxiliary) {
        put(out, "mtilde", fmt(cfg.forces.auxiliary->mass));
        put(out, "eps_tilde", fmt(cfg.forces.auxiliary->pair_epsilon));
        put(out, "rc_tilde", fmt(cfg.forces.auxiliary->pair_range));
    } else {
        put(out, "auxiliary", "none");
    }

    put(out, "kind", to_string(cfg.thermostat.kind));
    put(out, "alpha_const", fmt(cfg.thermostat.alpha_const));

    put(out, "dt", fmt(cfg.integrator.dt));
    put(out, "projection", cfg.integrator.projection ? "true" : "false");
    put(out, "reflection_tol", fmt(cfg.integrator.reflection_tol));
    put(out, "constraint_target", fmt(cfg.integrator.constraint_target));
    put(out, "max_reflections", std::to_string(cfg.integrator.max_reflections));
    put(out, "steps", std::to_string(cfg.steps));
    put(out, "record_every", std::to_string(cfg.record_every));

    std::string sizes;
    for (int n : cfg.study.sizes) {
        if (!sizes.empty()) sizes += ' ';
        sizes += std::to_string(n);
    }
    put(out, "sizes", sizes);
    put(out, "density", fmt(cfg.study.density));
    put(out, "h0", fmt(cfg.study.h0));
    put(out, "seeds", std::to_string(cfg.study.seeds));
    put(out, "study_steps", std::to_string(cfg.study.steps));
    put(out, "transient_fraction", fmt(cfg.study.transient_fraction));
    return out;
}

std::string config_digest(const RunConfig& cfg) {
    const std::string s = canonical_config_string(cfg);
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace thermoeq
