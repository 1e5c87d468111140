#include <cbc/simulator.hpp>

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cbc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double uniform01(Rng& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Inversion; callers keep the mean at or below 0.1.
int poisson_small(double mean, Rng& g) {
    double p = std::exp(-mean);
    double cdf = p;
    const double u = uniform01(g);
    int k = 0;
    while (u > cdf && k < 64) {
        ++k;
        p *= mean / k;
        cdf += p;
    }
    return k;
}

struct Coef {
    double mu = 0.0;
    double var = 0.0;
    double rate_pi = 0.0;
    double rate_eta = 0.0;
};

// Jump-source constants of the truncated scheme.
struct JumpSplit {
    double mass = 0.0;   // nu((delta, inf))
    double comp = 0.0;   // compensated mean of the retained jumps
    double m2 = 0.0;     // int_{<= delta} h^2 nu(dh)
    bool active = false;
};

JumpSplit split(const JumpFamily& fam, double delta, double comp_upper) {
    JumpSplit s;
    if (!has_jumps(fam)) return s;
    s.mass = tail_mass(fam, delta);
    s.comp = delta < comp_upper ? tail_mean(fam, delta, comp_upper) : 0.0;
    s.m2 = small_jump_second_moment(fam, delta);
    s.active = s.mass > 0.0;
    return s;
}

enum class Role { Cbc, Cbm, U, V };

class Dynamics {
public:
    Dynamics(const CbcModel& m, Role role, double delta, bool ar) : m_(m), role_(role) {
        b_ = -m.psi.lin();
        qpsi_ = m.psi.quad();
        qsig_ = m.sigma.quad();
        half_c_ = m.sigma.lin();
        if (role == Role::Cbc || role == Role::Cbm) {
            pi_ = split(m.psi.jumps(), delta, 1.0);
            eta_ = split(m.sigma.jumps(), delta, kInf);
            if (!ar) pi_.m2 = eta_.m2 = 0.0;
        }
    }

    template <Role R>
    Coef at(double z) const {
        Coef c;
        if constexpr (R == Role::Cbc) {
            c.mu = (b_ - pi_.comp) * z - (half_c_ + eta_.comp) * z * z;
            c.var = (2.0 * qpsi_ + pi_.m2) * z + (2.0 * qsig_ + eta_.m2) * z * z;
            c.rate_pi = pi_.mass * z;
            c.rate_eta = eta_.mass * z * z;
        } else if constexpr (R == Role::Cbm) {
            c.mu = (b_ - pi_.comp) - (half_c_ + eta_.comp) * z;
            c.var = (2.0 * qpsi_ + pi_.m2) + (2.0 * qsig_ + eta_.m2) * z;
            c.rate_pi = pi_.mass;
            c.rate_eta = eta_.mass * z;
        } else if constexpr (R == Role::U) {
            c.mu = -m_.psi.eval(z);
            c.var = 2.0 * m_.sigma.eval(z);
        } else {
            c.mu = m_.sigma.derivative(z) + m_.psi.eval(z);
            c.var = 2.0 * m_.sigma.eval(z);
        }
        return c;
    }

    double jump(const Coef& c, Rng& g) const {
        const double u = uniform01(g) * (c.rate_pi + c.rate_eta);
        return u < c.rate_pi ? sample_jump(m_.psi.jumps(), delta_, g) : sample_jump(m_.sigma.jumps(), delta_, g);
    }

    void set_delta(double d) { delta_ = d; }
    bool absorbing_zero() const {
        // V is only stopped at 0 when nothing pushes it back out.
        return role_ != Role::V || !(m_.sigma.lin() > 0.0);
    }

private:
    const CbcModel& m_;
    Role role_;
    double b_ = 0, qpsi_ = 0, qsig_ = 0, half_c_ = 0;
    double delta_ = 0.0;
    JumpSplit pi_, eta_;
};

double resolve_delta(const CbcModel& m, double start, const SimConfig& cfg) {
    if (cfg.delta > 0.0) return cfg.delta;
    return default_delta(m, start > 0.0 ? start : m.x0, cfg.dt);
}

// Fill the remaining observations once the path is frozen at `value`.
void freeze(PathSample& s, const SimConfig& cfg, std::size_t& next_obs, double value) {
    while (next_obs < cfg.observe.size()) s.observed[next_obs++] = value;
}

struct StepCap {
    double dt, rel;
    double ref;
};

double step_size(const Coef& c, double z, double room, const StepCap& cap) {
    double h = std::min(cap.dt, room);
    const double scale = std::max(z, cap.ref);
    if (c.mu != 0.0) h = std::min(h, cap.rel * scale / std::abs(c.mu));
    if (c.var > 0.0) {
        // Relative to the state itself near 0, where square-root noise dominates.
        const double s = 0.25 * std::max(z, 1e-3 * cap.ref);
        h = std::min(h, s * s / c.var);
    }
    const double rate = c.rate_pi + c.rate_eta;
    if (rate > 0.0) h = std::min(h, 0.1 / rate);
    return h;
}

// Brownian bridge with variance rate `var` between a and b (same side of `level`):
// crosses with probability exp(-2 (a - level)(b - level) / (var h)). No draw is spent
// when that probability is below e^-40.
inline bool bridge_hit(double a, double b, double level, double var, double h, Rng& g) {
    const double e = 2.0 * (a - level) * (b - level);
    if (!(var * h * 40.0 > e)) return false;
    return uniform01(g) < std::exp(-e / (var * h));
}

template <Role R>
PathSample run_direct(const CbcModel& model, double start, const SimConfig& cfg, PathRng& rng) {
    cfg.validate();
    if (!(start >= 0.0) || !std::isfinite(start)) throw ValidationError("simulate: start must be finite and >= 0");
    const double delta = resolve_delta(model, start, cfg);
    Dynamics dyn(model, R, delta, cfg.ar_correction);
    dyn.set_delta(delta);
    const bool absorbing = dyn.absorbing_zero();
    constexpr bool explosive = R != Role::Cbm;
    auto& g = rng.engine;
    boost::random::normal_distribution<double> normal;

    PathSample s;
    s.seed = rng.seed;
    s.stream = rng.stream;
    s.index = rng.index;
    s.observed.assign(cfg.observe.size(), 0.0);
    double t = 0.0, z = start;
    double zmin = z, zmax = z;
    long long steps = 0;
    std::size_t next_obs = 0;
    auto record = [&](double tt, double zz) {
        if (cfg.record) {
            s.times.push_back(tt);
            s.states.push_back(zz);
        }
    };
    record(t, z);
    while (next_obs < cfg.observe.size() && cfg.observe[next_obs] <= 0.0) s.observed[next_obs++] = z;

    const double level = cfg.passage_level.value_or(std::numeric_limits<double>::quiet_NaN());
    const bool want_passage = cfg.passage_level.has_value();
    const bool down = cfg.passage_direction == PassageDirection::Down;
    auto passage_reached = [&](double zz) { return down ? zz <= level : zz >= level; };
    bool passed = false;
    auto mark_passage = [&](double time) {
        s.events.first_passage = FirstPassage{level, time};
        passed = true;
    };
    if (want_passage && passage_reached(z)) mark_passage(0.0);

    auto finish = [&](double value) {
        s.min_state = zmin;
        s.max_state = zmax;
        s.steps = steps;
        freeze(s, cfg, next_obs, value);
        s.terminal_state = value;
        s.terminal_time = t;
        if (cfg.record && t < cfg.horizon) record(cfg.horizon, value);
        return s;
    };

    if (absorbing && z <= cfg.zero_eps) {
        s.events.extinction_time = 0.0;
        zmin = 0.0;
        return finish(0.0);
    }
    if (passed && cfg.stop_at_passage) return finish(z);

    const StepCap cap{cfg.dt, cfg.rel_step, std::max(start, model.x0)};
    const double horizon = cfg.horizon, z_cap = cfg.z_cap, zero_eps = cfg.zero_eps;
    const std::size_t n_obs = cfg.observe.size();
    const long long max_steps = cfg.max_steps;
    double target = next_obs < n_obs ? std::min(cfg.observe[next_obs], horizon) : horizon;
    while (t < horizon) {
        if (++steps > max_steps) {
            s.warning = "step budget exhausted";
            break;
        }
        const Coef c = dyn.at<R>(z);
        double h = step_size(c, z, target - t, cap);
        if (!(h > 0.0)) h = target - t;
        double zn = z + c.mu * h + std::sqrt(c.var * h) * normal(g);
        const double t_new = (t + h >= target) ? target : t + h;

        // Continuous part: zero and level crossings.
        if (absorbing) {
            bool dead = zn <= zero_eps;
            double frac = dead ? z / (z - std::min(zn, 0.0) + 1e-300) : 0.0;
            if (!dead && cfg.bridge && bridge_hit(z, zn, 0.0, c.var, h, g)) {
                dead = true;
                frac = z / (z + zn);
            }
            if (dead) {
                const double te = t + std::clamp(frac, 0.0, 1.0) * h;
                if (want_passage && !passed && down) mark_passage(t + std::clamp((z - level) / (z - std::min(zn, 0.0)), 0.0, 1.0) * h);
                t = te;
                s.events.extinction_time = te;
                zmin = 0.0;
                record(te, 0.0);
                return finish(0.0);
            }
        } else if (zn < 0.0) {
            zn = 0.0;
        }
        if (want_passage && !passed) {
            const bool crossed = passage_reached(zn);
            if (crossed) {
                mark_passage(t + std::clamp((z - level) / (z - zn), 0.0, 1.0) * h);
            } else if (cfg.bridge && bridge_hit(z, zn, level, c.var, h, g)) {
                const double a = std::abs(z - level), b = std::abs(zn - level);
                mark_passage(t + a / (a + b) * h);
            }
        }

        if (c.rate_pi + c.rate_eta > 0.0) {
            const int k = poisson_small((c.rate_pi + c.rate_eta) * h, g);
            for (int i = 0; i < k; ++i) zn += dyn.jump(c, g);
            if (k > 0 && want_passage && !passed && passage_reached(zn)) mark_passage(t_new);
        }

        t = t_new;
        z = zn;
        zmin = std::min(zmin, z);
        zmax = std::max(zmax, z);
        if (explosive && z >= z_cap) {
            s.events.explosion_time = t;
            record(t, kInf);
            zmax = kInf;
            return finish(kInf);
        }
        if (!explosive && z >= z_cap) {
            s.warning = "state reached z_cap (no explosion for this process)";
            record(t, z);
            return finish(z);
        }
        record(t, z);
        if (t >= target) {
            while (next_obs < n_obs && cfg.observe[next_obs] <= t) s.observed[next_obs++] = z;
            target = next_obs < n_obs ? std::min(cfg.observe[next_obs], horizon) : horizon;
        }
        if (passed && cfg.stop_at_passage) return finish(z);
    }
    return finish(z);
}

// Z_t = Y_{omega(t)}, omega the inverse of A(s) = int_0^s du / Y_u.
PathSample run_time_change(const CbcModel& model, double z0, const SimConfig& cfg, PathRng& rng) {
    cfg.validate();
    if (!(z0 >= 0.0) || !std::isfinite(z0)) throw ValidationError("simulate: start must be finite and >= 0");
    const double delta = resolve_delta(model, z0, cfg);
    Dynamics dyn(model, Role::Cbm, delta, cfg.ar_correction);
    dyn.set_delta(delta);
    auto& g = rng.engine;
    boost::random::normal_distribution<double> normal;

    PathSample s;
    s.seed = rng.seed;
    s.stream = rng.stream;
    s.index = rng.index;
    s.observed.assign(cfg.observe.size(), 0.0);
    std::size_t next_obs = 0;
    double A = 0.0, y = z0;
    s.min_state = s.max_state = y;
    auto record = [&](double tt, double zz) {
        if (cfg.record) {
            s.times.push_back(tt);
            s.states.push_back(zz);
        }
    };
    record(0.0, y);
    while (next_obs < cfg.observe.size() && cfg.observe[next_obs] <= 0.0) s.observed[next_obs++] = y;

    const double level = cfg.passage_level.value_or(std::numeric_limits<double>::quiet_NaN());
    const bool want_passage = cfg.passage_level.has_value();
    const bool down = cfg.passage_direction == PassageDirection::Down;
    auto reached = [&](double v) { return down ? v <= level : v >= level; };
    bool passed = false;
    if (want_passage && reached(y)) {
        s.events.first_passage = FirstPassage{level, 0.0};
        passed = true;
    }
    auto finish = [&](double t_end, double value) {
        freeze(s, cfg, next_obs, value);
        s.terminal_state = value;
        s.terminal_time = t_end;
        if (cfg.record && t_end < cfg.horizon) record(cfg.horizon, value);
        return s;
    };
    if (y <= cfg.zero_eps) {
        s.events.extinction_time = 0.0;
        return finish(0.0, 0.0);
    }
    if (passed && cfg.stop_at_passage) return finish(0.0, y);

    const StepCap cap{cfg.dt, cfg.rel_step, std::max(z0, model.x0)};
    while (A < cfg.horizon) {
        if (++s.steps > cfg.max_steps) {
            s.warning = "step budget exhausted";
            break;
        }
        const Coef c = dyn.at<Role::Cbm>(y);
        // One step of Z-time is at most dt: ds <= dt * y.
        double h = step_size(c, y, kInf, cap);
        h = std::min(h, cfg.dt * std::max(y, 1e-3 * cap.ref));
        double yn = y + c.mu * h + std::sqrt(c.var * h) * normal(g);
        bool dead = yn <= cfg.zero_eps;
        if (!dead && cfg.bridge && bridge_hit(y, yn, 0.0, c.var, h, g)) dead = true;
        if (dead) {
            const double t_end = A + h / y;
            if (want_passage && !passed && down) {
                s.events.first_passage = FirstPassage{level, std::min(t_end, cfg.horizon)};
                passed = true;
            }
            // Observations before the absorption time keep the last state.
            while (next_obs < cfg.observe.size() && cfg.observe[next_obs] < t_end) s.observed[next_obs++] = y;
            if (t_end <= cfg.horizon) {
                s.events.extinction_time = t_end;
                s.min_state = 0.0;
                record(t_end, 0.0);
                return finish(t_end, 0.0);
            }
            return finish(cfg.horizon, y);
        }
        if (c.rate_pi + c.rate_eta > 0.0) {
            const int k = poisson_small((c.rate_pi + c.rate_eta) * h, g);
            for (int i = 0; i < k; ++i) yn += dyn.jump(c, g);
        }
        const double dA = 0.5 * h * (1.0 / y + 1.0 / yn);
        const double A_new = A + dA;
        // Linear interpolation of Y in A for observation times and passages.
        while (next_obs < cfg.observe.size() && cfg.observe[next_obs] <= A_new) {
            const double w = (cfg.observe[next_obs] - A) / dA;
            s.observed[next_obs++] = y + w * (yn - y);
        }
        if (want_passage && !passed && reached(yn)) {
            const double w = std::clamp((y - level) / (y - yn), 0.0, 1.0);
            const double tp = A + w * dA;
            if (tp <= cfg.horizon) {
                s.events.first_passage = FirstPassage{level, tp};
                passed = true;
            }
        }
        if (A_new >= cfg.horizon && !(yn >= cfg.z_cap)) {
            const double yh = y + (cfg.horizon - A) / dA * (yn - y);
            s.min_state = std::min(s.min_state, yh);
            s.max_state = std::max(s.max_state, yh);
            record(cfg.horizon, yh);
            return finish(cfg.horizon, yh);
        }
        A = A_new;
        y = yn;
        s.min_state = std::min(s.min_state, y);
        s.max_state = std::max(s.max_state, y);
        if (y >= cfg.z_cap) {
            const double te = std::min(A, cfg.horizon);
            s.events.explosion_time = te;
            s.max_state = kInf;
            record(te, kInf);
            return finish(te, kInf);
        }
        record(A, y);
        if (passed && cfg.stop_at_passage) return finish(A, y);
    }
    return finish(std::min(A, cfg.horizon), y);
}

}  // namespace

const char* to_string(Scheme s) { return s == Scheme::Direct ? "Direct" : "TimeChange"; }

const char* to_string(Process p) {
    switch (p) {
    case Process::Z: return "Z";
    case Process::Y: return "Y";
    case Process::U: return "U";
    case Process::V: return "V";
    }
    return "?";
}

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("sim.dt must be > 0");
    if (!(delta >= 0.0) || delta > 1.0) throw ValidationError("sim.delta must lie in [0, 1] (0 = default rule)");
    if (!(z_cap > 0.0)) throw ValidationError("sim.z_cap must be > 0");
    if (!(zero_eps > 0.0) || !(zero_eps < z_cap)) throw ValidationError("sim.zero_eps must lie in (0, z_cap)");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ValidationError("sim.horizon must be finite and >= 0");
    if (!(rel_step > 0.0) || rel_step > 1.0) throw ValidationError("sim.rel_step must lie in (0, 1]");
    if (max_steps <= 0) throw ValidationError("sim.max_steps must be > 0");
    for (std::size_t i = 0; i < observe.size(); ++i) {
        if (!(observe[i] >= 0.0) || observe[i] > horizon)
            throw ValidationError("sim.observe times must lie in [0, horizon]");
        if (i > 0 && observe[i] < observe[i - 1]) throw ValidationError("sim.observe times must be sorted");
    }
    if (passage_level && !(*passage_level >= 0.0)) throw ValidationError("passage level must be >= 0");
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

PathRng path_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    PathRng r;
    r.seed = seed;
    r.stream = stream;
    r.index = index;
    r.engine.seed(splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index));
    return r;
}

namespace {

// Smallest delta with retained jump rate at z at most `bound`.
double rate_delta(const JumpFamily& pf, const JumpFamily& ef, double z, double bound) {
    double lo = std::log(1e-12), hi = 0.0;
    auto ok = [&](double d) { return z * tail_mass(pf, d) + z * z * tail_mass(ef, d) <= bound; };
    if (ok(std::exp(lo))) return std::exp(lo);
    if (!ok(1.0)) return 1.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ok(std::exp(mid)) ? hi : lo) = mid;
    }
    return std::exp(hi);
}

}  // namespace

double default_delta(const CbcModel& m, double z, double dt) {
    const JumpFamily& pf = m.psi.jumps();
    const JumpFamily& ef = m.sigma.jumps();
    if (!has_jumps(pf) && !has_jumps(ef)) return 1.0;
    const double gauss = 2.0 * m.psi.quad() * z + 2.0 * m.sigma.quad() * z * z;
    if (!(gauss > 0.0)) return rate_delta(pf, ef, z, 1.0 / dt);
    auto ok = [&](double d) {
        return z * small_jump_second_moment(pf, d) + z * z * small_jump_second_moment(ef, d) <= 1e-4 * gauss;
    };
    double lo = std::log(1e-12), hi = 0.0;
    double d = 1.0;
    if (!ok(1.0)) {
        if (!ok(std::exp(lo))) {
            d = std::exp(lo);
        } else {
            for (int i = 0; i < 60; ++i) {
                const double mid = 0.5 * (lo + hi);
                (ok(std::exp(mid)) ? lo : hi) = mid;
            }
            d = std::exp(lo);
        }
    }
    // A vanishing Gaussian part would otherwise drive delta (and the jump rate) without bound.
    return std::max(d, rate_delta(pf, ef, z, 100.0 / dt));
}

PathSample simulate_cbc(const CbcModel& model, double z0, const SimConfig& cfg, PathRng& rng) {
    if (cfg.scheme == Scheme::TimeChange) return run_time_change(model, z0, cfg, rng);
    return run_direct<Role::Cbc>(model, z0, cfg, rng);
}

PathSample simulate_cbm(const CbcModel& model, double y0, const SimConfig& cfg, PathRng& rng) {
    return run_direct<Role::Cbm>(model, y0, cfg, rng);
}

PathSample simulate_U(const CbcModel& model, double x0_state, const SimConfig& cfg, PathRng& rng) {
    return run_direct<Role::U>(model, x0_state, cfg, rng);
}

PathSample simulate_V(const CbcModel& model, double y0_state, const SimConfig& cfg, PathRng& rng) {
    return run_direct<Role::V>(model, y0_state, cfg, rng);
}

PathSample simulate(Process p, const CbcModel& model, double start, const SimConfig& cfg, PathRng& rng) {
    switch (p) {
    case Process::Z: return simulate_cbc(model, start, cfg, rng);
    case Process::Y: return simulate_cbm(model, start, cfg, rng);
    case Process::U: return simulate_U(model, start, cfg, rng);
    case Process::V: return simulate_V(model, start, cfg, rng);
    }
    throw ValidationError("simulate: unknown process");
}

PassageTime sample_first_passage(const CbcModel& model, Process process, double start, double level,
                                 PassageDirection direction, const SimConfig& cfg, PathRng& rng) {
    if (!(level >= 0.0)) throw ValidationError("first passage: level must be >= 0");
    if (direction == PassageDirection::Down && level > start)
        throw ValidationError("first passage: downward level must not exceed the start");
    if (direction == PassageDirection::Up && level < start)
        throw ValidationError("first passage: upward level must not be below the start");
    if (level == start) return {true, 0.0};
    SimConfig c = cfg;
    c.passage_level = level;
    c.passage_direction = direction;
    c.stop_at_passage = true;
    c.record = false;
    c.observe.clear();
    const PathSample s = simulate(process, model, start, c, rng);
    if (s.events.first_passage) return {true, s.events.first_passage->time};
    return {false, cfg.horizon};
}

}  // namespace cbc
