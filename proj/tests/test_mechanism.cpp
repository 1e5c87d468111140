#include <doctest.h>

#include <cbc/mechanism.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <functional>
#include <numeric>

using namespace cbc;

namespace {

constexpr auto B = MechanismKind::Branching;
constexpr auto C = MechanismKind::Collision;

// int_0^inf f(h) nu(h) dh split at 1, with nu the Levy density.
double levy_integral(const std::function<double(double)>& g) {
    boost::math::quadrature::tanh_sinh<double> near;
    boost::math::quadrature::exp_sinh<double> far;
    return near.integrate(g, 0.0, 1.0) + far.integrate(g, 1.0, std::numeric_limits<double>::infinity());
}

// e^{-u} - 1 + u without cancellation.
double compensated(double u) {
    if (u < 1e-3) return u * u * (0.5 - u * (1.0 / 6 - u * (1.0 / 24 - u / 120)));
    return std::expm1(-u) + u;
}

double lk_oracle(MechanismKind kind, double quad, double lin, double x, const std::function<double(double)>& density) {
    const double jump = levy_integral([&](double h) {
        if (h < 1e-60) return 0.0;  // integrand is O(h^{2 - index - 1}) there
        const double k = (kind == C || h <= 1.0) ? compensated(x * h) : std::expm1(-x * h);
        return k * density(h);
    });
    return quad * x * x + lin * x + jump;
}

}  // namespace

TEST_CASE("reference mechanisms evaluate in closed form") {
    const CbcModel v = verhulst_model(1.0, 1.0, 1.0);
    CHECK(v.sigma.eval(2.0) == doctest::Approx(3.0));
    CHECK(v.psi.eval(2.0) == doctest::Approx(-2.0));
    CHECK(v.sigma.derivative_at_zero() == doctest::Approx(0.5));

    const CbcModel g = gbm_model(2.0, 1.0);
    CHECK(g.sigma.eval(3.0) == doctest::Approx(4.5));
    CHECK(g.psi.eval(3.0) == doctest::Approx(-6.0));

    for (double x : {0.1, 1.0, 7.0}) {
        CHECK(Mechanism::power_collision(2.0, 1.5).eval(x) == doctest::Approx(2.0 * std::pow(x, 1.5)));
        CHECK(Mechanism::power_subordinator(0.5, 0.75).eval(x) == doctest::Approx(-0.5 * std::pow(x, 0.75)));
        CHECK(Mechanism::power_branching(3.0, 1.2).eval(x) == doctest::Approx(3.0 * std::pow(x, 1.2)));
    }
}

TEST_CASE("jump parts match direct Levy-Khintchine quadrature") {
    struct Case {
        MechanismKind kind;
        double quad, lin;
        JumpFamily jumps;
        std::function<double(double)> density;
    };
    const std::vector<Case> cases{
        {B, 0.0, 0.3, StableJumps{1.5, 0.8}, [](double h) { return 0.8 * std::pow(h, -2.5); }},
        {B, 0.2, -1.0, StableJumps{0.5, 1.0}, [](double h) { return std::pow(h, -1.5); }},
        {C, 0.1, 0.0, StableJumps{1.3, 0.5}, [](double h) { return 0.5 * std::pow(h, -2.3); }},
        {B, 0.0, 1.0, CompoundPoissonJumps{2.0, ExponentialSize{0.7}},
         [](double h) { return 2.0 * std::exp(-h / 0.7) / 0.7; }},
        {C, 0.5, 0.2, CompoundPoissonJumps{1.5, ExponentialSize{2.0}},
         [](double h) { return 1.5 * std::exp(-h / 2.0) / 2.0; }},
    };
    for (const auto& c : cases) {
        const Mechanism m(c.kind, c.quad, c.lin, c.jumps);
        for (double x : {0.05, 0.5, 2.0, 20.0}) {
            CAPTURE(describe(c.jumps));
            CAPTURE(x);
            CHECK(m.eval(x) == doctest::Approx(lk_oracle(c.kind, c.quad, c.lin, x, c.density)).epsilon(1e-8));
        }
    }
}

TEST_CASE("constant-size compound Poisson collision is explicit") {
    const Mechanism m(C, 0.0, 0.4, CompoundPoissonJumps{3.0, ConstantSize{0.5}});
    for (double x : {0.1, 1.0, 10.0})
        CHECK(m.eval(x) == doctest::Approx(0.4 * x + 3.0 * (std::exp(-0.5 * x) - 1.0 + 0.5 * x)));
}

TEST_CASE("stable collision equals scale * Gamma(-index) * x^index") {
    const Mechanism m(C, 0.0, 0.0, StableJumps{1.5, 2.0});
    for (double x : {0.01, 1.0, 100.0}) CHECK(m.eval(x) == doctest::Approx(2.0 * std::tgamma(-1.5) * std::pow(x, 1.5)));
}

TEST_CASE("derivative agrees with central differences") {
    const std::vector<Mechanism> ms{
        Mechanism(B, 0.5, -1.0, StableJumps{1.5, 1.0}),
        Mechanism(C, 0.5, 0.5, CompoundPoissonJumps{1.0, ExponentialSize{1.0}}),
        Mechanism(B, 0.0, 0.2, StableJumps{0.7, 0.3}),
    };
    for (const auto& m : ms)
        for (double x : {0.1, 1.0, 5.0}) {
            const double e = 1e-5 * x;
            CHECK(m.derivative(x) == doctest::Approx((m.eval(x + e) - m.eval(x - e)) / (2 * e)).epsilon(1e-6));
        }
}

TEST_CASE("mechanisms vanish at 0 and collisions are nonnegative and convex") {
    const std::vector<Mechanism> ms{
        Mechanism(C, 0.5, 0.5), Mechanism(C, 0.0, 0.0, StableJumps{1.2, 1.0}),
        Mechanism(C, 0.1, 0.3, CompoundPoissonJumps{2.0, ConstantSize{1.0}}), Mechanism::power_collision(1.0, 1.7)};
    for (const auto& m : ms) {
        CHECK(m.eval(0.0) == 0.0);
        double prev_slope = -1.0;
        for (double x = 0.1; x < 20.0; x *= 1.7) {
            CHECK(m.eval(x) >= 0.0);
            const double s = m.derivative(x);
            CHECK(s >= prev_slope - 1e-12);
            prev_slope = s;
        }
    }
}

TEST_CASE("jump measure moments") {
    const JumpFamily st = StableJumps{1.5, 2.0};
    CHECK(tail_mass(st, 0.1) == doctest::Approx(2.0 * std::pow(0.1, -1.5) / 1.5));
    CHECK(small_jump_second_moment(st, 0.1) == doctest::Approx(2.0 * std::pow(0.1, 0.5) / 0.5));
    CHECK(tail_mean(st, 0.1, 1.0) == doctest::Approx(2.0 * (std::pow(0.1, -0.5) - 1.0) / 0.5));
    const JumpFamily ex = CompoundPoissonJumps{3.0, ExponentialSize{2.0}};
    CHECK(tail_mass(ex, 1.0) == doctest::Approx(3.0 * std::exp(-0.5)));
    CHECK(tail_mean(ex, 0.0, std::numeric_limits<double>::infinity()) == doctest::Approx(6.0));
    CHECK_FALSE(has_jumps(NoJumps{}));
}

TEST_CASE("sampled jumps follow the restricted measure") {
    Rng rng(12345);
    const JumpFamily ex = CompoundPoissonJumps{1.0, ExponentialSize{2.0}};
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double h = sample_jump(ex, 0.5, rng);
        REQUIRE(h > 0.5);
        sum += h;
        sum2 += h * h;
    }
    const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 2.5) < 4 * se);

    // Stable tail above delta is Pareto(index): P(h > 2 delta) = 2^-index.
    const JumpFamily st = StableJumps{1.5, 1.0};
    int above = 0;
    for (int i = 0; i < n; ++i) above += sample_jump(st, 0.1, rng) > 0.2;
    const double p = std::pow(2.0, -1.5), frac = static_cast<double>(above) / n;
    CHECK(std::abs(frac - p) < 4 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("conditions on the branching mechanism") {
    CHECK(grey_condition(Mechanism(B, 1.0, 0.0)) == Decision::Yes);
    CHECK(grey_condition(Mechanism(B, 0.0, -1.0)) == Decision::No);
    CHECK(grey_condition(Mechanism(B, 0.0, 1.0)) == Decision::No);
    CHECK(grey_condition(Mechanism::power_branching(1.0, 1.5)) == Decision::Yes);
    CHECK(grey_condition(Mechanism::power_subordinator(1.0, 0.5)) == Decision::No);

    CHECK(dynkin_condition(Mechanism(B, 0.0, -1.0)) == Decision::Yes);
    CHECK(dynkin_condition(Mechanism::power_subordinator(1.0, 0.5)) == Decision::No);

    CHECK(psi_class(Mechanism(B, 0.0, -1.0)) == PsiClass::SubordinatorCase);
    CHECK(psi_class(Mechanism(B, 1.0, -1.0)) == PsiClass::GeneralCase);
    CHECK(largest_zero(Mechanism(B, 1.0, -1.0)) == doctest::Approx(1.0));
}

TEST_CASE("z_star of the logistic-subordinator model is exactly mu / D") {
    const CbcModel m(Mechanism(C, 0.0, 0.5), Mechanism(B, 0.0, -1.0));
    CHECK(z_star(m) == 2.0);
    CHECK(z_star(verhulst_model(1.0, 1.0, 1.0)) == 0.0);
    CHECK(z_star(CbcModel(Mechanism(C, 0.0, 0.25), Mechanism(B, 0.0, 1.0))) == 0.0);
}

TEST_CASE("invalid mechanisms are rejected") {
    CHECK_THROWS_AS(Mechanism(B, -1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(Mechanism(C, 0.5, -0.1), ValidationError);
    CHECK_THROWS_AS(Mechanism(C, 0.0, 0.0, StableJumps{0.5, 1.0}), ValidationError);
    CHECK_THROWS_AS(Mechanism(B, 0.0, 0.0, StableJumps{1.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(Mechanism(B, 0.0, 0.0, CompoundPoissonJumps{-1.0, ConstantSize{1.0}}), ValidationError);
    CHECK_THROWS_AS(Mechanism::power_subordinator(1.0, 1.5), ValidationError);
    CHECK_THROWS_AS(CbcModel(Mechanism(B, 1.0, 0.0), Mechanism(B, 1.0, 0.0)), ValidationError);
    CHECK_THROWS_AS(CbcModel(Mechanism(C, 0.5, 0.0), Mechanism(B, 0.0, -1.0), -1.0), ValidationError);
    CHECK_THROWS_AS(Mechanism(C, 0.5, 0.0).eval(-1.0), ValidationError);
}
