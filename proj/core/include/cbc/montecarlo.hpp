#pragma once

#include <cbc/mechanism.hpp>
#include <cbc/simulator.hpp>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cbc {

// Master seed, substream tag and worker count for one estimate. Path i always draws
// from path_rng(seed, stream, i), so results do not depend on `workers`.
struct McRun {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    unsigned workers = 1;

    McRun with_stream(std::uint64_t s) const { return McRun{seed, s, workers}; }
};

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;  // standard error: sample standard deviation / sqrt(n)
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

// Pairwise summation; the result depends only on the order of `v`.
double pairwise_sum(const double* v, std::size_t n);
McEstimate summarize(const std::vector<double>& samples, const McRun& run);
// (a - b) / sqrt(se_a^2 + se_b^2); 0 for identical degenerate estimates.
double z_score(const McEstimate& a, const McEstimate& b);
double z_score(const McEstimate& a, double exact);

// Runs body(i) for i in [0, n) on `workers` threads; the first exception is rethrown.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

// E_start[exp(-x X_t)]; exploded paths contribute 0 (for x > 0).
McEstimate mc_laplace(const CbcModel& model, Process process, double start, double x, double t, std::size_t n,
                      const SimConfig& cfg, const McRun& run);
// Same paths for every (t, x): result[i][j] is at ts[i], xs[j].
std::vector<std::vector<McEstimate>> mc_laplace_grid(const CbcModel& model, Process process, double start,
                                                     const std::vector<double>& xs, const std::vector<double>& ts,
                                                     std::size_t n, const SimConfig& cfg, const McRun& run);

struct DualityGrid {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> other;  // z for Laplace duality, y for Siegmund duality
};

struct DualityPoint {
    double t = 0.0, x = 0.0, other = 0.0;
    McEstimate lhs, rhs;
    double z_score = 0.0;
};

struct DualityReport {
    std::string kind;
    std::vector<DualityPoint> points;
    // Siegmund only: E_z[e^{-xZ_t}] against int z e^{-zy} P_y(V_t > x) dy.
    std::vector<DualityPoint> composed;
    double threshold = 4.0;
    double max_abs_z = 0.0;
    bool pass = false;
};

// E_z[e^{-xZ_t}] = E_x[e^{-zU_t}]. Refuses uncertified models unless allow_uncertified.
DualityReport check_laplace_duality(const CbcModel& model, const DualityGrid& grid, std::size_t n,
                                    const SimConfig& cfg, const McRun& run, bool allow_uncertified = false);
// P_x(U_t < y) = P_y(V_t > x); requires S_V(0, x0] = S_V(x0, inf) = inf.
DualityReport check_siegmund_duality(const CbcModel& model, const DualityGrid& grid, std::size_t n,
                                     const SimConfig& cfg, const McRun& run, bool with_composed = true);

// Empirical Laplace transform of Z at late times.
class EmpiricalLaplace {
public:
    EmpiricalLaplace(std::vector<std::vector<double>> states, McRun run) : states_(std::move(states)), run_(run) {}
    // Per path: mean of exp(-x Z) over the retained times; estimate over paths.
    McEstimate at(double x) const;
    McEstimate operator()(double x) const { return at(x); }
    std::size_t paths() const { return states_.size(); }

private:
    std::vector<std::vector<double>> states_;
    McRun run_;
};

// Retained times: `samples` evenly spaced points of [burn_in, t_long] (just t_long when 1).
// Throws ValidationError unless the stationary verdict is Limit.
EmpiricalLaplace mc_stationary(const CbcModel& model, double t_long, double burn_in, std::size_t n,
                               const SimConfig& cfg, const McRun& run, std::size_t samples = 1);

struct ExtinctionRow {
    double theta = 0.0;
    McEstimate z_based;         // E_z[e^{-theta zeta_0}]
    McEstimate v_based;         // E[e^{-theta tau_inf}] for V started at Exp(z)
    McEstimate v_based_cap10;   // same with z_cap * 10
    double analytic = std::numeric_limits<double>::quiet_NaN();
    double z_zv = 0.0, z_za = 0.0, z_va = 0.0;
};

struct ExtinctionReport {
    double z0 = 0.0;
    double censor_horizon = 0.0;
    double extinction_frequency = 0.0;  // Z paths reaching 0 before censoring
    double explosion_frequency = 0.0;   // V paths reaching z_cap before censoring
    std::vector<ExtinctionRow> rows;
    std::string note;
};

struct ExtinctionOptions {
    bool v_based = true;
    bool cap_rerun = true;
    bool analytic = true;
};

// Censoring at the first T with e^{-theta T} <= 1e-6 * analytic value (cfg.horizon when the
// analytic value is unavailable or zero).
ExtinctionReport mc_extinction(const CbcModel& model, double z0, const std::vector<double>& thetas, std::size_t n,
                               const SimConfig& cfg, const McRun& run, const ExtinctionOptions& opt = {});

struct PassageReport {
    std::vector<double> thetas;
    std::vector<McEstimate> estimates;
    double hit_frequency = 0.0;
    double censor_horizon = 0.0;
};

// E_start[exp(-theta T)] with T the first passage through `level`; censored paths contribute 0.
PassageReport mc_first_passage(const CbcModel& model, Process process, double start, double level,
                               PassageDirection dir, const std::vector<double>& thetas, std::size_t n,
                               const SimConfig& cfg, const McRun& run);

}  // namespace cbc
