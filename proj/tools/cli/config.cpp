#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cbc::cli {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json& require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    return j;
}

MechanismKind parse_kind(const std::string& s, const std::string& path) {
    if (s == "branching") return MechanismKind::Branching;
    if (s == "collision") return MechanismKind::Collision;
    throw ConfigError(path, "kind must be \"branching\" or \"collision\"");
}

JumpFamily parse_jumps(const json& j, const std::string& path) {
    require_object(j, path);
    const std::string family = get_string(j, "family", path);
    if (family == "none") {
        allow_keys(j, {"family"}, path);
        return NoJumps{};
    }
    if (family == "stable") {
        allow_keys(j, {"family", "index", "scale"}, path);
        return StableJumps{get_number(j, "index", path), get_number(j, "scale", path)};
    }
    if (family == "compound_poisson") {
        allow_keys(j, {"family", "rate", "size"}, path);
        const double rate = get_number(j, "rate", path);
        const std::string sp = join(path, "size");
        if (!j.contains("size")) throw ConfigError(sp, "missing");
        const json& size = require_object(j.at("size"), sp);
        const std::string law = get_string(size, "law", sp);
        if (law == "constant") {
            allow_keys(size, {"law", "h0"}, sp);
            return CompoundPoissonJumps{rate, ConstantSize{get_number(size, "h0", sp)}};
        }
        if (law == "exponential") {
            allow_keys(size, {"law", "mean"}, sp);
            return CompoundPoissonJumps{rate, ExponentialSize{get_number(size, "mean", sp)}};
        }
        throw ConfigError(join(sp, "law"), "must be \"constant\" or \"exponential\"");
    }
    throw ConfigError(join(path, "family"), "must be \"none\", \"stable\" or \"compound_poisson\"");
}

template <class F>
auto with_path(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const ValidationError& e) {
        throw ConfigError(path, e.what());
    }
}

std::uint64_t parse_u64(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
    throw ConfigError(path, "expected a non-negative integer");
}

}  // namespace

std::uint64_t RunConfig::require_seed() const {
    if (!mc.seed) throw ConfigError("mc.seed", "a seed is required for stochastic commands (--seed or mc.seed)");
    return *mc.seed;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

double get_number(const json& obj, const std::string& key, const std::string& path, std::optional<double> fallback) {
    const std::string p = join(path, key);
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(p, "missing");
    }
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(p, "expected a number");
    return v.get<double>();
}

bool get_bool(const json& obj, const std::string& key, const std::string& path, std::optional<bool> fallback) {
    const std::string p = join(path, key);
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(p, "missing");
    }
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(p, "expected true or false");
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& path,
                       std::optional<std::string> fallback) {
    const std::string p = join(path, key);
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(p, "missing");
    }
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(p, "expected a string");
    return v.get<std::string>();
}

std::vector<double> get_numbers(const json& obj, const std::string& key, const std::string& path,
                                std::optional<std::vector<double>> fallback) {
    const std::string p = join(path, key);
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(p, "missing");
    }
    const json& v = obj.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw ConfigError(p, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(p + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

void allow_keys(const json& obj, const std::vector<std::string>& keys, const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
            throw ConfigError(join(path, it.key()), "unknown field");
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--override", "expected key=value, got \"" + assignment + "\"");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* node = &doc;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].empty()) throw ConfigError(key, "empty path component");
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) throw ConfigError(key, "cannot descend into a non-object");
        node = &(*node)[parts[i]];
    }
    *node = std::move(value);
}

Mechanism parse_mechanism(const json& j, MechanismKind role, const std::string& path) {
    require_object(j, path);
    if (j.contains("kind") && parse_kind(get_string(j, "kind", path), join(path, "kind")) != role)
        throw ConfigError(join(path, "kind"), role == MechanismKind::Collision ? "sigma must be a collision mechanism"
                                                                               : "psi must be a branching mechanism");
    if (j.contains("power")) {
        allow_keys(j, {"kind", "power"}, path);
        const std::string pp = join(path, "power");
        const json& p = require_object(j.at("power"), pp);
        return with_path(pp, [&] {
            if (p.contains("dprime")) {
                allow_keys(p, {"dprime", "beta"}, pp);
                if (role != MechanismKind::Branching)
                    throw ConfigError(pp, "power{dprime, beta} describes a branching mechanism");
                return Mechanism::power_subordinator(get_number(p, "dprime", pp), get_number(p, "beta", pp));
            }
            allow_keys(p, {"d", "alpha"}, pp);
            const double d = get_number(p, "d", pp), a = get_number(p, "alpha", pp);
            return role == MechanismKind::Collision ? Mechanism::power_collision(d, a) : Mechanism::power_branching(d, a);
        });
    }
    allow_keys(j, {"kind", "quad", "lin", "jumps"}, path);
    const double quad = get_number(j, "quad", path, 0.0);
    const double lin = get_number(j, "lin", path, 0.0);
    const JumpFamily jumps = j.contains("jumps") ? parse_jumps(j.at("jumps"), join(path, "jumps")) : JumpFamily{NoJumps{}};
    return with_path(path, [&] { return Mechanism(role, quad, lin, jumps); });
}

CbcModel parse_model(const json& j, const std::string& path) {
    require_object(j, path);
    allow_keys(j, {"name", "sigma", "psi", "x0", "policy"}, path);
    if (!j.contains("sigma")) throw ConfigError(join(path, "sigma"), "missing");
    if (!j.contains("psi")) throw ConfigError(join(path, "psi"), "missing");
    Mechanism sigma = parse_mechanism(j.at("sigma"), MechanismKind::Collision, join(path, "sigma"));
    Mechanism psi = parse_mechanism(j.at("psi"), MechanismKind::Branching, join(path, "psi"));
    const double x0 = get_number(j, "x0", path, 1.0);
    NumericPolicy pol;
    if (j.contains("policy")) {
        const std::string pp = join(path, "policy");
        const json& p = require_object(j.at("policy"), pp);
        allow_keys(p, {"quad_rel_tol", "growth_factor", "finite_ratio", "max_cutoffs", "min_divergence_cutoffs"}, pp);
        pol.quad_rel_tol = get_number(p, "quad_rel_tol", pp, pol.quad_rel_tol);
        pol.growth_factor = get_number(p, "growth_factor", pp, pol.growth_factor);
        pol.finite_ratio = get_number(p, "finite_ratio", pp, pol.finite_ratio);
        pol.max_cutoffs = static_cast<int>(get_number(p, "max_cutoffs", pp, pol.max_cutoffs));
        pol.min_divergence_cutoffs =
            static_cast<int>(get_number(p, "min_divergence_cutoffs", pp, pol.min_divergence_cutoffs));
    }
    return with_path(path, [&] { return CbcModel(sigma, psi, x0, pol); });
}

SimConfig parse_sim(const json& j, const std::string& path) {
    SimConfig c;
    if (j.is_null()) return c;
    require_object(j, path);
    allow_keys(j, {"dt", "delta", "z_cap", "zero_eps", "ar_correction", "horizon", "scheme", "rel_step", "bridge",
                   "max_steps"},
               path);
    c.dt = get_number(j, "dt", path, c.dt);
    c.delta = get_number(j, "delta", path, c.delta);
    c.z_cap = get_number(j, "z_cap", path, c.z_cap);
    c.zero_eps = get_number(j, "zero_eps", path, c.zero_eps);
    c.ar_correction = get_bool(j, "ar_correction", path, c.ar_correction);
    c.horizon = get_number(j, "horizon", path, c.horizon);
    c.rel_step = get_number(j, "rel_step", path, c.rel_step);
    c.bridge = get_bool(j, "bridge", path, c.bridge);
    c.max_steps = static_cast<long long>(get_number(j, "max_steps", path, static_cast<double>(c.max_steps)));
    const std::string scheme = get_string(j, "scheme", path, std::string("direct"));
    if (scheme == "direct") c.scheme = Scheme::Direct;
    else if (scheme == "time_change") c.scheme = Scheme::TimeChange;
    else throw ConfigError(join(path, "scheme"), "must be \"direct\" or \"time_change\"");
    with_path(path, [&] {
        c.validate();
        return 0;
    });
    return c;
}

RunConfig parse_config(json doc) {
    RunConfig rc;
    require_object(doc, "config");
    allow_keys(doc, {"model", "models", "sim", "mc", "command", "description"}, "");
    if (doc.contains("model") == doc.contains("models")) throw ConfigError("model", "give exactly one of model / models");
    if (doc.contains("model")) {
        const json& m = doc.at("model");
        rc.models.push_back({m.is_object() && m.contains("name") ? get_string(m, "name", "model") : std::string("model"),
                             parse_model(m, "model")});
    } else {
        const json& arr = doc.at("models");
        if (!arr.is_array() || arr.empty()) throw ConfigError("models", "expected a non-empty list");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = "models[" + std::to_string(i) + "]";
            const std::string name =
                arr[i].is_object() && arr[i].contains("name") ? get_string(arr[i], "name", p) : "model" + std::to_string(i);
            rc.models.push_back({name, parse_model(arr[i], p)});
        }
    }
    rc.sim = parse_sim(doc.contains("sim") ? doc.at("sim") : json(), "sim");
    if (doc.contains("mc")) {
        const json& m = require_object(doc.at("mc"), "mc");
        allow_keys(m, {"n", "seed", "workers", "threshold"}, "mc");
        const double n = get_number(m, "n", "mc", static_cast<double>(rc.mc.n));
        if (!(n >= 2) || n != std::floor(n)) throw ConfigError("mc.n", "expected an integer >= 2");
        rc.mc.n = static_cast<std::size_t>(n);
        if (m.contains("seed")) rc.mc.seed = parse_u64(m.at("seed"), "mc.seed");
        if (m.contains("workers")) {
            const std::uint64_t w = parse_u64(m.at("workers"), "mc.workers");
            if (w < 1 || w > 1024) throw ConfigError("mc.workers", "expected 1..1024");
            rc.mc.workers = static_cast<unsigned>(w);
        }
        rc.mc.threshold = get_number(m, "threshold", "mc", rc.mc.threshold);
        if (!(rc.mc.threshold > 0.0)) throw ConfigError("mc.threshold", "must be > 0");
    }
    if (doc.contains("command")) rc.command = require_object(doc.at("command"), "command");
    json hashed = doc;
    if (hashed.contains("mc")) hashed["mc"].erase("workers");
    rc.hash = hex64(fnv1a64(hashed.dump()));
    rc.raw = std::move(doc);
    return rc;
}

RunConfig load_config(const std::string& file, const std::vector<std::string>& overrides) {
    std::ifstream in(file);
    if (!in) throw ConfigError("--config", "cannot read \"" + file + "\"");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("--config", "\"" + file + "\" is not valid JSON");
    for (const auto& o : overrides) apply_override(doc, o);
    return parse_config(std::move(doc));
}

}  // namespace cbc::cli
