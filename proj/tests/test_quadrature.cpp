#include <doctest.h>

#include <cbc/classifier.hpp>
#include <cbc/quadrature.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>

using namespace cbc;

TEST_CASE("improper tails: convergent and divergent power laws") {
    SUBCASE("toward infinity") {
        const auto v = improper_tail([](double x) { return -2.0 * std::log(x); }, 1.0, Direction::TowardInfinity);
        CHECK(v.status == IntegralStatus::Finite);
        CHECK(v.value == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(improper_tail([](double x) { return -std::log(x); }, 1.0, Direction::TowardInfinity).status ==
              IntegralStatus::Divergent);
        CHECK(improper_tail([](double x) { return -0.9 * std::log(x); }, 1.0, Direction::TowardInfinity).status ==
              IntegralStatus::Divergent);
    }
    SUBCASE("toward zero") {
        const auto v = improper_tail([](double x) { return -0.5 * std::log(x); }, 1.0, Direction::TowardZero);
        CHECK(v.status == IntegralStatus::Finite);
        CHECK(v.value == doctest::Approx(2.0).epsilon(1e-8));
        CHECK(improper_tail([](double x) { return -std::log(x); }, 1.0, Direction::TowardZero).status ==
              IntegralStatus::Divergent);
    }
    SUBCASE("log-space handles huge densities") {
        // int_1^inf e^{800 - x} dx = e^{799}.
        const auto v = improper_tail([](double x) { return 800.0 - x; }, 1.0, Direction::TowardInfinity);
        CHECK(v.status == IntegralStatus::Finite);
        CHECK(v.log_value == doctest::Approx(799.0).epsilon(1e-10));
    }
}

TEST_CASE("scale and speed of geometric Brownian motion") {
    // Sigma = x^2/2, Psi = -x: Q(u) = -2 ln u, s = 2, m = u^-2.
    const ScaleSpeed ss(gbm_model(1.0, 1.0));
    for (double u : {0.01, 0.5, 3.0, 100.0}) {
        CHECK(ss.q(u) == doctest::Approx(-2.0 * std::log(u)).epsilon(1e-9));
        CHECK(std::exp(ss.log_scale_density(u)) == doctest::Approx(2.0).epsilon(1e-9));
    }
    CHECK(ss.sv(0.5, 2.0) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(ss.mv(1.0, 2.0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(ss.s_z(4.0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(ss.improper(Improper::SV0).status == IntegralStatus::Finite);
    CHECK(ss.improper(Improper::SV0).value == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(ss.improper(Improper::SVinf).status == IntegralStatus::Divergent);
}

TEST_CASE("speed measure tail of the Verhulst model") {
    // a = c = mu = 1: m(x) = 4 / (x + 1)^2, M_V(x, inf) = 4 / (x + 1).
    const ScaleSpeed ss(verhulst_model(1.0, 1.0, 1.0));
    CHECK(ss.log_mv_tail(0.0) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
    CHECK(ss.log_mv_tail(1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(ss.log_mv_tail(9.0) == doctest::Approx(std::log(0.4)).epsilon(1e-9));
    CHECK(ss.improper(Improper::MV0).status == IntegralStatus::Finite);
    CHECK(ss.improper(Improper::MVinf).status == IntegralStatus::Finite);
    CHECK(ss.improper(Improper::SV0).status == IntegralStatus::Divergent);
    CHECK(ss.improper(Improper::SVinf).status == IntegralStatus::Divergent);
}

TEST_CASE("scale transform against independent quadrature") {
    // Sigma = x^2/2 + int (e^{-xh} - 1 + xh) e^{-h} dh = x^2 (x + 3) / (2 (1 + x)), Psi = -3x.
    // Partial fractions give s(x) = 2 (1 + x) (x + 3)^3 / 256.
    const CbcModel m(Mechanism(MechanismKind::Collision, 0.5, 0.0, CompoundPoissonJumps{1.0, ExponentialSize{1.0}}),
                     Mechanism(MechanismKind::Branching, 0.0, -3.0));
    const ScaleSpeed ss(m);
    auto s = [](double x) { return 2.0 * (1.0 + x) * std::pow(x + 3.0, 3) / 256.0; };
    for (double x : {0.1, 1.0, 10.0}) CHECK(std::exp(ss.log_scale_density(x)) == doctest::Approx(s(x)).epsilon(1e-8));
    boost::math::quadrature::exp_sinh<double> es;
    for (double w : {0.5, 1.0, 3.0}) {
        const double ref = es.integrate([&](double x) { return std::exp(-w * x + std::log(2.0 / 256) + std::log1p(x) + 3 * std::log(x + 3.0)); }, 0.0,
                                        std::numeric_limits<double>::infinity());
        CHECK(ss.s_z(w) == doctest::Approx(ref).epsilon(1e-7));
    }
    CHECK(ss.improper(Improper::SV0).status == IntegralStatus::Finite);
    // (1 + x)(x + 3)^3 = (x + 3)^4 - 2 (x + 3)^3 integrates to 68.7 over [0, 1].
    CHECK(ss.improper(Improper::SV0).value == doctest::Approx(2.0 * 68.7 / 256).epsilon(1e-7));
}

TEST_CASE("GBM classifier verdict: S_V(0, x0] finite iff b > a^2 / 2") {
    for (double a : {0.5, 1.0, 1.5})
        for (double ratio : {0.25, 0.5, 0.999, 1.0, 1.001, 2.0, 4.0}) {
            const double b = ratio * a * a / 2.0;
            CAPTURE(a);
            CAPTURE(b);
            const ScaleSpeed ss(gbm_model(b, a));
            const auto st = ss.improper(Improper::SV0).status;
            CHECK(st == (b > a * a / 2.0 ? IntegralStatus::Finite : IntegralStatus::Divergent));
        }
}

TEST_CASE("numeric protocol agrees with analytic endpoint orders") {
    const std::vector<CbcModel> models{
        verhulst_model(1.0, 1.0, 1.0),
        gbm_model(2.0, 1.0),
        power_model(1.0, 1.5, 1.0, 0.75),
        power_model(1.0, 1.5, 1.0, 0.25),
        CbcModel(Mechanism(MechanismKind::Collision, 0.5, 0.5), Mechanism(MechanismKind::Branching, 1.0, 0.0)),
    };
    for (std::size_t i = 0; i < models.size(); ++i)
        for (Improper w : {Improper::SV0, Improper::SVinf, Improper::MV0, Improper::MVinf}) {
            const ScaleSpeed ss(models[i]);
            const auto analytic = ss.improper_analytic(w);
            if (!analytic) continue;
            CAPTURE(i);
            CAPTURE(std::string(to_string(w)));
            const auto numeric = ss.improper_numeric(w);
            if (!numeric.inconclusive()) CHECK(numeric.status == *analytic);
            CHECK(ss.improper(w).status == *analytic);
        }
}
