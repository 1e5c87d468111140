#pragma once

#include <cbc/error.hpp>
#include <cbc/integrate.hpp>

#include <cmath>
#include <cstdint>
#include <boost/random/mersenne_twister.hpp>

#include <random>
#include <string>
#include <variant>

namespace cbc {

// Same sequence as std::mt19937_64; markedly faster with the ziggurat normal.
using Rng = boost::random::mt19937_64;

enum class MechanismKind { Branching, Collision };

struct NoJumps {};

// Levy density scale * h^(-1-index) on (0, inf).
struct StableJumps {
    double index;
    double scale;
};

struct ConstantSize {
    double size;
};

struct ExponentialSize {
    double mean;
};

struct CompoundPoissonJumps {
    double rate;
    std::variant<ConstantSize, ExponentialSize> size;
};

using JumpFamily = std::variant<NoJumps, StableJumps, CompoundPoissonJumps>;

// Mass of the jump measure on (delta, inf).
double tail_mass(const JumpFamily& fam, double delta);
// Integral of h over (delta, upper]; upper may be +inf.
double tail_mean(const JumpFamily& fam, double delta, double upper);
// Integral of h^2 over (0, delta].
double small_jump_second_moment(const JumpFamily& fam, double delta);
// Draw from the jump measure restricted to (delta, inf), normalized.
double sample_jump(const JumpFamily& fam, double delta, Rng& rng);
bool has_jumps(const JumpFamily& fam);
std::string describe(const JumpFamily& fam);

// x -> coefficient * x^exponent in a limit regime.
struct PowerLaw {
    double exponent = 0.0;
    double coefficient = 0.0;
};

struct AsymptoticOrder {
    PowerLaw at_zero;
    PowerLaw at_infinity;
    bool exact = false;
};

// Log-log least squares fit of |f| at 16 points per decade between x_start and
// x_end (3 decades apart); the sign is taken from f(x_start).
template <class F>
PowerLaw fit_power_law(F&& f, double x_start, double x_end);

// Levy-Khintchine function
//   Branching: quad x^2 + lin x + int (e^{-xh} - 1 + xh 1{h<=1}) pi(dh)
//   Collision: quad x^2 + lin x + int (e^{-xh} - 1 + xh) eta(dh)
class Mechanism {
public:
    Mechanism() = default;
    Mechanism(MechanismKind kind, double quad, double lin, JumpFamily jumps = NoJumps{});

    // Collision d x^alpha, alpha in [1, 2].
    static Mechanism power_collision(double d, double alpha);
    // Branching -d' x^beta, beta in (0, 1].
    static Mechanism power_subordinator(double dprime, double beta);
    // Branching d x^alpha, alpha in [1, 2].
    static Mechanism power_branching(double d, double alpha);

    double eval(double x) const;
    double operator()(double x) const { return eval(x); }
    double derivative(double x) const;
    // May be -inf when the jump measure has infinite mean above 1.
    double derivative_at_zero() const;
    // Direct numeric quadrature of the jump integral; oracle for the closed forms.
    double eval_by_quadrature(double x) const;

    const AsymptoticOrder& order() const { return order_; }
    bool is_zero() const { return zero_; }

    MechanismKind kind() const { return kind_; }
    double quad() const { return quad_; }
    double lin() const { return lin_; }
    const JumpFamily& jumps() const { return jumps_; }
    // Net coefficient of x in the fully compensated representation
    // (for infinite-mean stable jumps: the linear coefficient at infinity).
    double net_drift() const { return drift_; }

    std::string describe() const;

private:
    void validate() const;
    void compute_order();
    double jump_part(double x) const;
    double jump_part_derivative(double x) const;

    MechanismKind kind_ = MechanismKind::Branching;
    double quad_ = 0.0;
    double lin_ = 0.0;
    JumpFamily jumps_ = NoJumps{};
    double drift_ = 0.0;
    double stable_coef_ = 0.0;  // scale * Gamma(-index)
    bool zero_ = true;
    AsymptoticOrder order_{};
};

enum class PsiClass { SubordinatorCase, GeneralCase };
const char* to_string(PsiClass c);

struct CbcModel {
    Mechanism sigma;
    Mechanism psi;
    double x0 = 1.0;
    NumericPolicy policy{};

    CbcModel() = default;
    CbcModel(Mechanism sigma_, Mechanism psi_, double x0_ = 1.0, NumericPolicy policy_ = {});
    void validate() const;
};

// Convenience constructors for the reference models.
CbcModel gbm_model(double growth, double volatility, double x0 = 1.0);
// Sigma = a^2 x^2/2 + c x/2, Psi = -mu x.
CbcModel verhulst_model(double a, double c, double mu, double x0 = 1.0);
// Sigma = d x^alpha, Psi = -d' x^beta.
CbcModel power_model(double d, double alpha, double dprime, double beta, double x0 = 1.0);

PsiClass psi_class(const Mechanism& psi);
double largest_zero(const Mechanism& psi);
double z_star(const CbcModel& model);
Decision grey_condition(const Mechanism& psi);
// Throws ValidationError when -psi is not nonnegative near 0+.
Decision dynkin_condition(const Mechanism& psi);

template <class F>
PowerLaw fit_power_law(F&& f, double x_start, double x_end) {
    constexpr int per_decade = 16;
    constexpr int decades = 3;
    const int n = per_decade * decades + 1;
    const double step = (std::log(x_end) - std::log(x_start)) / (n - 1);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double sign = 0.0;
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(x_start) + step * i;
        const double v = f(std::exp(lx));
        if (sign == 0.0) sign = v < 0 ? -1.0 : 1.0;
        const double ly = std::log(std::abs(v));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    return PowerLaw{slope, sign * std::exp(intercept)};
}

}  // namespace cbc
