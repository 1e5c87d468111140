#include <doctest.h>

#include <cbc/classifier.hpp>
#include <cbc/eigensolver.hpp>
#include <cbc/montecarlo.hpp>

#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

using namespace cbc;

TEST_CASE("pairwise sum is exact on integers and close to Kahan on noise") {
    std::vector<double> v(10001);
    std::iota(v.begin(), v.end(), 0.0);
    CHECK(pairwise_sum(v.data(), v.size()) == 10000.0 * 10001.0 / 2.0);
    CHECK(pairwise_sum(v.data(), 0) == 0.0);

    std::vector<double> w(100000, 0.1);
    CHECK(pairwise_sum(w.data(), w.size()) == doctest::Approx(10000.0).epsilon(1e-13));
}

TEST_CASE("summarize: mean and standard error") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    const McEstimate e = summarize(v, McRun{9, 4, 1});
    CHECK(e.mean == 3.0);
    CHECK(e.se == doctest::Approx(std::sqrt(2.5 / 5.0)));
    CHECK(e.n == 5);
    CHECK(e.seed == 9);
    CHECK(e.stream == 4);
}

TEST_CASE("z scores") {
    McEstimate a, b;
    a.mean = 1.0;
    a.se = 0.3;
    b.mean = 0.5;
    b.se = 0.4;
    CHECK(z_score(a, b) == doctest::Approx(1.0));
    CHECK(z_score(a, 0.4) == doctest::Approx(2.0));
    McEstimate c;
    CHECK(z_score(c, c) == 0.0);
}

TEST_CASE("parallel_for visits each index once and rethrows") {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(100, 3,
                                 [](std::size_t i) {
                                     if (i == 57) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}

TEST_CASE("estimates do not depend on the worker count") {
    const CbcModel m = verhulst_model(1, 1, 1);
    SimConfig cfg;
    const auto one = mc_laplace_grid(m, Process::Z, 1.0, {0.5, 1.0}, {0.5, 1.0}, 2000, cfg, McRun{77, 0, 1});
    const auto three = mc_laplace_grid(m, Process::Z, 1.0, {0.5, 1.0}, {0.5, 1.0}, 2000, cfg, McRun{77, 0, 3});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(one[i][j].mean == three[i][j].mean);
            CHECK(one[i][j].se == three[i][j].se);
        }
    const auto other = mc_laplace(m, Process::Z, 1.0, 1.0, 1.0, 2000, cfg, McRun{77, 1, 1});
    CHECK(other.mean != one[1][1].mean);
}

TEST_CASE("standard error shrinks like 1/sqrt(n)") {
    const CbcModel m = verhulst_model(1, 1, 1);
    SimConfig cfg;
    cfg.dt = 1e-2;
    double ratio = 0.0;
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
        const auto small = mc_laplace(m, Process::Z, 1.0, 1.0, 0.5, 2000, cfg, McRun{100 + rep, 0, 1});
        const auto big = mc_laplace(m, Process::Z, 1.0, 1.0, 0.5, 4000, cfg, McRun{200 + rep, 0, 1});
        ratio += big.se / small.se / 5.0;
    }
    CHECK(ratio == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("refusals") {
    SimConfig cfg;
    const DualityGrid grid{{0.5}, {1.0}, {1.0}};
    // S_V(0, x0] finite and Dynkin fails: non-explosion is not certified.
    CHECK_THROWS_AS(check_laplace_duality(power_model(1, 1.5, 1, 0.25), grid, 100, cfg, McRun{1, 0, 1}),
                    ValidationError);
    // GBM with b > a^2/2 is transient: S_V(0, x0] < inf.
    CHECK_THROWS_AS(check_siegmund_duality(gbm_model(2, 1), grid, 100, cfg, McRun{1, 0, 1}), ValidationError);
    CHECK_THROWS_AS(mc_stationary(gbm_model(2, 1), 5.0, 5.0, 100, cfg, McRun{1, 0, 1}), ValidationError);
    CHECK_THROWS_AS(mc_laplace(verhulst_model(1, 1, 1), Process::Z, 1.0, 1.0, 1.0, 1, cfg, McRun{1, 0, 1}),
                    ValidationError);
    CHECK_THROWS_AS(mc_extinction(verhulst_model(1, 1, 1), 1.0, {}, 100, cfg, McRun{1, 0, 1}), ValidationError);
}

TEST_CASE("small Laplace duality grid passes and is deterministic") {
    const CbcModel m = verhulst_model(1, 1, 1);
    SimConfig cfg;
    cfg.dt = 2e-3;
    const DualityGrid grid{{0.5}, {0.5, 2.0}, {1.0}};
    const DualityReport a = check_laplace_duality(m, grid, 4000, cfg, McRun{5, 0, 1});
    const DualityReport b = check_laplace_duality(m, grid, 4000, cfg, McRun{5, 0, 2});
    REQUIRE(a.points.size() == 2);
    CHECK(a.pass);
    CHECK(a.max_abs_z <= 4.0);
    for (std::size_t k = 0; k < a.points.size(); ++k) {
        CHECK(a.points[k].lhs.mean == b.points[k].lhs.mean);
        CHECK(a.points[k].rhs.mean == b.points[k].rhs.mean);
    }
    // E_z[e^{-xZ_t}] decreases in x.
    CHECK(a.points[0].lhs.mean > a.points[1].lhs.mean);
}

TEST_CASE("first passage of GBM against the closed form") {
    const double b = 2.0, a = 1.0;
    const CbcModel m = gbm_model(b, a);
    SimConfig cfg;
    // Upward drift: passage down to 1 from 2 has probability (1/2)^{2b/a^2 - 1}.
    const PassageReport rep =
        mc_first_passage(m, Process::Z, 2.0, 1.0, PassageDirection::Down, {1.0}, 20000, cfg, McRun{3, 0, 1});
    const double exact = EigenSolver(m).fpt_laplace(1.0, 2.0, 1.0);
    REQUIRE(rep.estimates.size() == 1);
    CHECK(std::abs(z_score(rep.estimates[0], exact)) < 4.0);
    CHECK(rep.hit_frequency == doctest::Approx(0.125).epsilon(0.15));
}

TEST_CASE("stationary estimator on the Verhulst model") {
    const CbcModel m = verhulst_model(1, 1, 1);
    SimConfig cfg;
    cfg.dt = 2e-3;
    const EmpiricalLaplace emp = mc_stationary(m, 20.0, 10.0, 2000, cfg, McRun{8, 0, 1}, 5);
    CHECK(emp.paths() == 2000);
    const McEstimate e = emp(1.0);
    CHECK(std::abs(e.mean - 0.5) < 4 * e.se);
    CHECK(emp(0.0).mean == 1.0);
}

TEST_CASE("extinction estimates decrease in theta") {
    const CbcModel m(Mechanism(MechanismKind::Collision, 0.5, 0.5), Mechanism(MechanismKind::Branching, 1.0, 0.0));
    SimConfig cfg;
    cfg.dt = 2e-3;
    const ExtinctionReport rep = mc_extinction(m, 1.0, {0.5, 2.0, 8.0}, 2000, cfg, McRun{4, 0, 1},
                                               ExtinctionOptions{false, false, true});
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].z_based.mean > rep.rows[1].z_based.mean);
    CHECK(rep.rows[1].z_based.mean > rep.rows[2].z_based.mean);
    CHECK(rep.rows[0].analytic > rep.rows[2].analytic);
    CHECK(rep.extinction_frequency > 0.0);
}
