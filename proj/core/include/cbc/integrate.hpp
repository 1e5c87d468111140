#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace cbc {

struct QuadResult {
    double value = 0.0;
    double abs_err = 0.0;
    int evaluations = 0;
};

// log of int_a^b exp(logf(t)) dt. log_value = -inf for a vanishing integral.
struct LogQuadResult {
    double log_value = -std::numeric_limits<double>::infinity();
    double rel_err = 0.0;
    int evaluations = 0;
};

// Globally adaptive G7/K15 bisection on a finite interval.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double rel_tol = 1e-12, double abs_tol = 0.0, int max_panels = 4000);

// Same scheme with every panel evaluated relative to its own maximum of logf,
// so integrands spanning e^{+-700} and beyond are handled without overflow.
LogQuadResult log_integrate(const std::function<double(double)>& logf, double a, double b,
                            double rel_tol = 1e-12, int max_panels = 4000);

// log(e^a + e^b) with -inf handling.
double log_add(double a, double b);
// log(e^a - e^b), requires a >= b.
double log_sub(double a, double b);

// Fixed 15-point Kronrod rule; returns (kronrod, gauss) estimates.
void kronrod15(const std::function<double(double)>& f, double a, double b, double& kronrod, double& gauss);

struct NumericPolicy {
    double quad_rel_tol = 1e-11;
    double growth_factor = 1e-3;     // "grows" means by at least this relative amount
    double finite_ratio = 1e-10;     // increment / running total below this: converged
    int max_cutoffs = 60;
    // Growth is only read as divergence past anchor * 2^k for this k; earlier growth can be
    // pre-asymptotic (e.g. x^{-3/2} exp(-4 x^{-1/4}) rises up to x = 16).
    int min_divergence_cutoffs = 16;
    int potential_points_per_decade = 128;
    double potential_decades = 36.0;
};

enum class IntegralStatus { Finite, Divergent, Inconclusive };
const char* to_string(IntegralStatus s);

struct IntegralVerdict {
    IntegralStatus status = IntegralStatus::Inconclusive;
    double value = std::numeric_limits<double>::quiet_NaN();
    double log_value = std::numeric_limits<double>::quiet_NaN();
    double abs_err = std::numeric_limits<double>::quiet_NaN();
    bool analytic = false;
    std::vector<double> cutoffs;
    std::vector<double> log_partial_sums;
    std::string note;

    bool finite() const { return status == IntegralStatus::Finite; }
    bool divergent() const { return status == IntegralStatus::Divergent; }
    bool inconclusive() const { return status == IntegralStatus::Inconclusive; }
};

enum class Direction { TowardZero, TowardInfinity };

// Improper integral of exp(log_density(x)) dx from `anchor` to 0 or to infinity,
// accumulated over geometric cutoffs anchor * 2^{-+k}. With may_diverge = false
// the growth rule is switched off (finiteness known in advance; value wanted).
IntegralVerdict improper_tail(const std::function<double(double)>& log_density, double anchor,
                              Direction dir, const NumericPolicy& policy = {}, bool may_diverge = true);

}  // namespace cbc
