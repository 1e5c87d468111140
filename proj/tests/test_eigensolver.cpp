#include <doctest.h>

#include <cbc/classifier.hpp>
#include <cbc/eigensolver.hpp>

#include <cmath>

using namespace cbc;

namespace {

constexpr auto B = MechanismKind::Branching;
constexpr auto C = MechanismKind::Collision;

// Drifted Brownian motion in ln Z hitting ln(a/z): exponent of (a/z)^r.
double gbm_rate(double b, double a, double theta) {
    const double mu = b - a * a / 2.0;
    return (mu + std::sqrt(mu * mu + 2.0 * a * a * theta)) / (a * a);
}

}  // namespace

TEST_CASE("GBM passage transforms match the drifted Brownian formula") {
    for (double b : {1.0, 2.0})
        for (double a : {0.5, 1.0}) {
            const EigenSolver es(gbm_model(b, a));
            for (double theta : {0.5, 1.0, 2.0})
                for (auto [z, lvl] : {std::pair{2.0, 1.0}, {4.0, 1.0}, {4.0, 2.0}}) {
                    CAPTURE(b);
                    CAPTURE(a);
                    CAPTURE(theta);
                    CAPTURE(z);
                    const double want = std::pow(lvl / z, gbm_rate(b, a, theta));
                    CHECK(es.fpt_laplace(theta, z, lvl) == doctest::Approx(want).epsilon(1e-4));
                }
        }
    CHECK(EigenSolver(gbm_model(2.0, 1.0)).fpt_laplace(1.0, 2.0, 1.0) == doctest::Approx(0.0846936).epsilon(1e-5));
}

TEST_CASE("Verhulst at theta = 1 has h = ((x + 1) / 2)^2") {
    // Sigma h'' + (Sigma' + Psi) h' = h with Sigma = x^2/2 + x/2, Psi = -x.
    const EigenSolver es(verhulst_model(1.0, 1.0, 1.0));
    const auto sol = es.solve(1.0);
    for (double x : {0.01, 0.3, 1.0, 5.0, 40.0}) CHECK(sol->h(x) == doctest::Approx(std::pow((x + 1) / 2, 2)).epsilon(1e-6));
    CHECK(sol->log_derivative(3.0) == doctest::Approx(2.0 * 3.0 / 4.0).epsilon(1e-6));
    // f(z) = (2/z^2 + 2/z + 1) / 4.
    CHECK(es.f_theta(1.0, 2.0) == doctest::Approx(0.625).epsilon(1e-7));
    CHECK(es.f_theta_alternative(1.0, 2.0) == doctest::Approx(0.625).epsilon(1e-7));
    CHECK(es.fpt_laplace(1.0, 2.0, 1.0) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(sol->residual() < 1e-6);
}

TEST_CASE("subordinator model Sigma = x/2, Psi = -x has exponential h") {
    // h = exp(2 (x - 1)), f(z) = z e^-2 / (z - 2) for z > 2 = z*.
    const EigenSolver es(CbcModel(Mechanism(C, 0.0, 0.5), Mechanism(B, 0.0, -1.0)));
    const auto sol = es.solve(1.0);
    for (double x : {0.1, 1.0, 3.0}) CHECK(sol->h(x) == doctest::Approx(std::exp(2.0 * (x - 1.0))).epsilon(1e-6));
    CHECK(sol->tail_order() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(es.f_theta(1.0, 3.0) == doctest::Approx(3.0 * std::exp(-2.0)).epsilon(1e-6));
    CHECK(es.fpt_laplace(1.0, 4.0, 3.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK_THROWS_AS(es.f_theta(1.0, 1.5), ValidationError);
}

TEST_CASE("collision-free limit approaches the CB passage transform") {
    // Sigma = lambda (x^2/2 + x/2), Psi = x^2 - x; error is O(lambda).
    const Mechanism psi(B, 1.0, -1.0);
    const double oracle = cb_oracle_f(psi, 1.0, 3.0, 2.0) / cb_oracle_f(psi, 1.0, 2.0, 2.0);
    double prev_err = 1.0;
    for (double lambda : {0.1, 0.01, 0.001}) {
        const EigenSolver es(CbcModel(Mechanism(C, lambda / 2, lambda / 2), psi, 2.0));
        const double err = std::abs(es.fpt_laplace(1.0, 3.0, 2.0) - oracle);
        CHECK(err < prev_err / 5.0);
        CHECK(err < 1.5 * lambda);
        prev_err = err;
    }
}

TEST_CASE("extinction transform: two routes to f_theta agree") {
    const EigenSolver es(CbcModel(Mechanism(C, 0.5, 0.5), Mechanism(B, 1.0, 0.0)));
    for (double theta : {0.5, 1.0, 2.0}) {
        CAPTURE(theta);
        CHECK(es.f_theta(theta, 1.0) == doctest::Approx(es.f_theta_alternative(theta, 1.0)).epsilon(1e-6));
        const double e = es.extinction_laplace(theta, 1.0);
        CHECK(e > 0.0);
        CHECK(e < 1.0);
    }
    CHECK(es.extinction_laplace(0.5, 1.0) > es.extinction_laplace(1.0, 1.0));
    CHECK(es.solve(1.0)->tail_order() == doctest::Approx(-1.0).epsilon(1e-3));
    CHECK(es.non_explosion_certified());
}

TEST_CASE("passage transforms are monotone and bounded") {
    const std::vector<CbcModel> models{verhulst_model(1, 1, 1), power_model(1, 1.5, 1, 0.75), gbm_model(2, 1),
                                       CbcModel(Mechanism(C, 0.5, 0.5), Mechanism(B, 1.0, 0.0))};
    for (std::size_t i = 0; i < models.size(); ++i) {
        CAPTURE(i);
        const EigenSolver es(models[i]);
        CHECK(es.fpt_laplace(1.0, 1.5, 1.5) == doctest::Approx(1.0));
        double prev = 1.0;
        for (double z : {1.2, 1.5, 2.0, 4.0}) {
            const double v = es.fpt_laplace(1.0, z, 1.0);
            CHECK(v > 0.0);
            CHECK(v < prev);
            prev = v;
        }
        CHECK(es.fpt_laplace(2.0, 2.0, 1.0) < es.fpt_laplace(0.5, 2.0, 1.0));
        const auto h = es.solve(1.0);
        auto xs = h->grid();
        auto ys = h->values();
        for (std::size_t k = 1; k < ys.size(); ++k) CHECK(ys[k] >= ys[k - 1]);
    }
}

TEST_CASE("power model passage transform is stable under solver tolerances") {
    const CbcModel m = power_model(1.0, 1.5, 1.0, 0.75);
    const double base = EigenSolver(m).fpt_laplace(1.0, 2.0, 1.0);
    EigenOptions tight;
    tight.step_target = 1e-10;
    tight.eps_tol = 1e-10;
    CHECK(EigenSolver(m, tight).fpt_laplace(1.0, 2.0, 1.0) == doctest::Approx(base).epsilon(1e-6));
    CHECK(base == doctest::Approx(0.4543846246).epsilon(1e-6));
}

TEST_CASE("solutions are cached per theta") {
    const EigenSolver es(verhulst_model(1, 1, 1));
    CHECK(es.solve(1.0).get() == es.solve(1.0).get());
    CHECK(es.solve(1.0).get() != es.solve(2.0).get());
}

TEST_CASE("invalid passage requests") {
    const EigenSolver es(verhulst_model(1, 1, 1));
    CHECK_THROWS_AS(es.fpt_laplace(1.0, 1.0, 2.0), ValidationError);
    CHECK_THROWS_AS(es.fpt_laplace(-1.0, 2.0, 1.0), ValidationError);
}
