#pragma once

#include <cbc/mechanism.hpp>
#include <cbc/quadrature.hpp>

#include <memory>
#include <optional>
#include <string>

namespace cbc {

enum class Attraction { No, WithPositiveProb, AlmostSurely, Inconclusive };
const char* to_string(Attraction a);

enum class Stationary { Limit, ToZero, ToInfinity, NoLimit, NotApplicable, Inconclusive };
const char* to_string(Stationary s);

struct BoundaryReport {
    double z_star = 0.0;
    PsiClass psi_class = PsiClass::SubordinatorCase;
    bool psi_zero = false;

    Attraction infinity_attracting = Attraction::Inconclusive;
    Attraction zero_attracting = Attraction::Inconclusive;

    // Sufficient conditions only: S_V(0, x0] = inf or Dynkin's condition.
    Decision non_explosion_certified = Decision::Inconclusive;
    // Grey's condition; meaningful as "extinction has positive probability"
    // only under non-explosion, hence the caveat flag.
    Decision extinction_possible = Decision::Inconclusive;
    bool extinction_caveat = true;

    Stationary stationary = Stationary::Inconclusive;
    Decision first_moment = Decision::Inconclusive;  // of the limit law, when stationary == Limit

    IntegralStatus sv0 = IntegralStatus::Inconclusive;
    IntegralStatus svinf = IntegralStatus::Inconclusive;
    IntegralStatus mv0 = IntegralStatus::Inconclusive;
    IntegralStatus mvinf = IntegralStatus::Inconclusive;
    IntegralStatus feller_i = IntegralStatus::Inconclusive;
    IntegralStatus psi_sigma0 = IntegralStatus::Inconclusive;
    Decision grey = Decision::Inconclusive;
    std::optional<Decision> dynkin;  // empty: -Psi not positive near 0, condition vacuous
};

// S_V(0, x0] = inf or Dynkin's condition; No means "not certified".
Decision non_explosion_certified(const ScaleSpeed& ss);

BoundaryReport classify(const ScaleSpeed& ss);
BoundaryReport classify(const CbcModel& model);

// P_z(hit a before exploding / drifting to infinity), z* < a <= z.
double attract_prob(const ScaleSpeed& ss, double z, double a);
// P_z(Z_t -> 0).
double prob_limit_zero(const ScaleSpeed& ss, double z);

// Laplace transform x -> M_V(x, inf) / M_V(0, inf) of the limit law.
class StationaryLaw {
public:
    explicit StationaryLaw(std::shared_ptr<const ScaleSpeed> ss);

    double laplace(double x) const;
    double operator()(double x) const { return laplace(x); }
    // Mean of the limit law (= -L'(0+)); +inf when the first moment is infinite.
    double mean() const;

private:
    std::shared_ptr<const ScaleSpeed> ss_;
    double log_total_;
};

struct StationaryVerdict {
    Stationary kind = Stationary::Inconclusive;
    bool hypothesis_holds = false;  // S_V(0, x0] = S_V(x0, inf) = inf
    std::optional<StationaryLaw> law;
};

StationaryVerdict stationary_verdict(std::shared_ptr<const ScaleSpeed> ss);
StationaryVerdict stationary_verdict(const CbcModel& model);

// Convenience: the Limit evaluator at x; throws ValidationError when there is no limit law.
double stationary_laplace(const CbcModel& model, double x);

}  // namespace cbc
