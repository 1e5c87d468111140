#include <doctest.h>

#include <cbc/montecarlo.hpp>
#include <cbc/simulator.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

using namespace cbc;

namespace {

constexpr auto B = MechanismKind::Branching;
constexpr auto C = MechanismKind::Collision;

struct Moments {
    double mean = 0, se = 0;
};

template <class F>
Moments over_paths(std::size_t n, std::uint64_t seed, F&& f) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        PathRng rng = path_rng(seed, 0, i);
        v[i] = f(rng);
    }
    const McEstimate e = summarize(v, McRun{seed, 0, 1});
    return {e.mean, e.se};
}

// Collision-free CB: E_z[e^{-x Z_t}] = exp(-z u_t), u' = -Psi(u), u_0 = x (RK4).
double cb_laplace(const Mechanism& psi, double z, double x, double t) {
    const int n = 4000;
    const double h = t / n;
    double u = x;
    for (int i = 0; i < n; ++i) {
        const double k1 = -psi.eval(u), k2 = -psi.eval(u + h / 2 * k1), k3 = -psi.eval(u + h / 2 * k2),
                     k4 = -psi.eval(u + h * k3);
        u += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return std::exp(-z * u);
}

}  // namespace

TEST_CASE("paths are reproducible per (seed, stream, index)") {
    const CbcModel m = verhulst_model(1, 1, 1);
    SimConfig cfg;
    cfg.record = true;
    PathRng a = path_rng(7, 1, 3), b = path_rng(7, 1, 3), c = path_rng(7, 1, 4), d = path_rng(7, 2, 3);
    const PathSample pa = simulate_cbc(m, 1.0, cfg, a);
    const PathSample pb = simulate_cbc(m, 1.0, cfg, b);
    CHECK(pa.states == pb.states);
    CHECK(pa.times == pb.times);
    CHECK(simulate_cbc(m, 1.0, cfg, c).terminal_state != pa.terminal_state);
    CHECK(simulate_cbc(m, 1.0, cfg, d).terminal_state != pa.terminal_state);
}

TEST_CASE("GBM: Laplace transform and mean at t = 1") {
    const double b = 2.0, a = 1.0;
    const CbcModel m = gbm_model(b, a);
    SimConfig cfg;
    // E[exp(-Z_1)], Z_1 = exp((b - a^2/2) + a W_1).
    const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double w) {
            return std::exp(-std::exp(b - a * a / 2 + a * w)) * std::exp(-w * w / 2) / std::sqrt(2 * std::numbers::pi);
        },
        -12.0, 12.0, 10, 1e-12);
    const auto lap = over_paths(20000, 11, [&](PathRng& r) { return std::exp(-simulate_cbc(m, 1.0, cfg, r).terminal_state); });
    CHECK(std::abs(lap.mean - oracle) < 4 * lap.se);
    const auto mean = over_paths(20000, 12, [&](PathRng& r) { return simulate_cbc(m, 1.0, cfg, r).terminal_state; });
    CHECK(std::abs(mean.mean - std::exp(b)) < 4 * mean.se);
}

TEST_CASE("paths started below z* never go below their start") {
    // Sigma = x/2, Psi = -x - int_{h<=1} h pi(dh) + int (e^{-xh} - 1 + xh 1{h<=1}) pi(dh): -Psi is a subordinator
    // with linear coefficient 1 at infinity, z* = 2, and Z has only upward jumps.
    const double rate = 1.0, mean = 0.5;
    const double small_mean = rate * (mean - (1.0 + mean) * std::exp(-1.0 / mean));
    const CbcModel m(Mechanism(C, 0.0, 0.5),
                     Mechanism(B, 0.0, -1.0 - small_mean, CompoundPoissonJumps{rate, ExponentialSize{mean}}));
    CHECK(z_star(m) == doctest::Approx(2.0).epsilon(1e-6));
    SimConfig cfg;
    cfg.horizon = 3.0;
    double lowest = 1.0;
    for (std::size_t i = 0; i < 500; ++i) {
        PathRng r = path_rng(5, 0, i);
        lowest = std::min(lowest, simulate_cbc(m, 1.0, cfg, r).min_state);
    }
    CHECK(lowest >= 1.0 - 1e-6);

    const CbcModel det(Mechanism(C, 0.0, 0.5), Mechanism(B, 0.0, -1.0));
    PathRng r = path_rng(5, 0, 0);
    const PathSample above = simulate_cbc(det, 3.0, cfg, r);
    CHECK(above.min_state >= 2.0 - 1e-9);
    // Logistic ODE z' = z - z^2/2 from 3.
    CHECK(above.terminal_state == doctest::Approx(2.0 / (1.0 - std::exp(-3.0) / 3.0)).epsilon(1e-3));
}

TEST_CASE("Feller diffusion: extinction probability and Laplace transform") {
    // Psi = x^2 with negligible collisions: P_z(Z_t = 0) = exp(-z / t), E[e^{-xZ_t}] = exp(-z x / (1 + x t)).
    const CbcModel m(Mechanism(C, 1e-9, 0.0), Mechanism(B, 1.0, 0.0));
    SimConfig cfg;
    const std::size_t n = 20000;
    std::size_t dead = 0;
    std::vector<double> lap(n);
    for (std::size_t i = 0; i < n; ++i) {
        PathRng r = path_rng(21, 0, i);
        const PathSample s = simulate_cbc(m, 1.0, cfg, r);
        if (s.events.extinction_time) {
            ++dead;
            CHECK(s.terminal_state == 0.0);
            CHECK(*s.events.extinction_time <= 1.0);
        }
        lap[i] = std::exp(-s.terminal_state);
    }
    const double p = std::exp(-1.0), freq = static_cast<double>(dead) / n;
    CHECK(std::abs(freq - p) < 4 * std::sqrt(p * (1 - p) / n));
    const McEstimate e = summarize(lap, McRun{});
    CHECK(std::abs(e.mean - std::exp(-0.5)) < 4 * e.se);
}

TEST_CASE("jump branching mechanisms against the CB Laplace ODE") {
    SimConfig cfg;
    cfg.ar_correction = true;
    SUBCASE("compound Poisson") {
        const Mechanism psi(B, 0.5, 0.3, CompoundPoissonJumps{2.0, ExponentialSize{0.5}});
        const CbcModel m(Mechanism(C, 1e-9, 0.0), psi);
        const auto est = over_paths(10000, 31, [&](PathRng& r) { return std::exp(-simulate_cbc(m, 1.0, cfg, r).terminal_state); });
        CHECK(std::abs(est.mean - cb_laplace(psi, 1.0, 1.0, 1.0)) < 4 * est.se);
    }
    SUBCASE("stable, index 1.5") {
        const Mechanism psi(B, 0.0, 0.2, StableJumps{1.5, 0.5});
        const CbcModel m(Mechanism(C, 1e-9, 0.0), psi);
        cfg.delta = 0.02;
        const auto est = over_paths(10000, 32, [&](PathRng& r) { return std::exp(-simulate_cbc(m, 1.0, cfg, r).terminal_state); });
        CHECK(std::abs(est.mean - cb_laplace(psi, 1.0, 1.0, 1.0)) < 4 * est.se);
    }
}

TEST_CASE("V explodes when Grey's condition holds; the explosion is recorded") {
    const CbcModel m(Mechanism(C, 0.5, 0.5), Mechanism(B, 1.0, 0.0));
    SimConfig cfg;
    cfg.horizon = 50.0;
    cfg.observe = {50.0};
    PathRng r = path_rng(3, 0, 0);
    const PathSample s = simulate_V(m, 1.0, cfg, r);
    REQUIRE(s.events.explosion_time);
    CHECK(*s.events.explosion_time < 50.0);
    CHECK(std::isinf(s.terminal_state));
    CHECK(std::isinf(s.observed[0]));
}

TEST_CASE("observations land on the recorded skeleton") {
    const CbcModel m = verhulst_model(1, 1, 1);
    SimConfig cfg;
    cfg.record = true;
    cfg.observe = {0.25, 0.5, 1.0};
    PathRng r = path_rng(9, 0, 0);
    const PathSample s = simulate_cbc(m, 1.0, cfg, r);
    REQUIRE(s.observed.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        const auto it = std::find(s.times.begin(), s.times.end(), cfg.observe[k]);
        REQUIRE(it != s.times.end());
        CHECK(s.states[it - s.times.begin()] == s.observed[k]);
    }
    CHECK(s.terminal_time == 1.0);
    for (std::size_t k = 1; k < s.times.size(); ++k) CHECK(s.times[k] > s.times[k - 1]);
}

TEST_CASE("direct and time-changed schemes agree") {
    const CbcModel m = verhulst_model(1, 1, 1);
    SimConfig direct, tc;
    tc.scheme = Scheme::TimeChange;
    const auto a = over_paths(10000, 41, [&](PathRng& r) { return std::exp(-simulate_cbc(m, 1.0, direct, r).terminal_state); });
    const auto b = over_paths(10000, 42, [&](PathRng& r) { return std::exp(-simulate_cbc(m, 1.0, tc, r).terminal_state); });
    CHECK(std::abs(a.mean - b.mean) < 4 * std::hypot(a.se, b.se));
}

TEST_CASE("default truncation is admissible") {
    const CbcModel m(Mechanism(C, 0.5, 0.0, StableJumps{1.5, 1.0}), Mechanism(B, 0.0, 0.0, StableJumps{1.2, 1.0}));
    const double d = default_delta(m, 1.0, 1e-3);
    CHECK(d > 0.0);
    CHECK(d <= 1.0);
    // A vanishing Gaussian part does not push the jump rate past 100 per base step.
    const JumpFamily st = StableJumps{1.5, 0.5};
    const CbcModel thin(Mechanism(C, 1e-9, 0.0), Mechanism(B, 0.0, 0.2, st));
    const double dt = default_delta(thin, 1.0, 1e-3);
    CHECK(tail_mass(st, dt) <= 100.0 / 1e-3 * (1.0 + 1e-9));
}

TEST_CASE("invalid simulation settings") {
    const CbcModel m = verhulst_model(1, 1, 1);
    PathRng r = path_rng(1, 0, 0);
    SimConfig bad;
    bad.dt = 0.0;
    CHECK_THROWS_AS(simulate_cbc(m, 1.0, bad, r), ValidationError);
    SimConfig bad_delta;
    bad_delta.delta = 2.0;
    CHECK_THROWS_AS(simulate_cbc(m, 1.0, bad_delta, r), ValidationError);
    CHECK_THROWS_AS(simulate_cbc(m, -1.0, SimConfig{}, r), ValidationError);
}
