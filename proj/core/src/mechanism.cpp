#include <cbc/mechanism.hpp>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cbc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSnap = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// e^{-y} - 1 + y without cancellation for small y.
double phi(double y) {
    if (std::abs(y) < 0.05) {
        // y^2/2 - y^3/6 + ... - y^9/9!
        double term = y * y / 2.0, sum = term;
        for (int n = 3; n <= 9; ++n) {
            term *= -y / n;
            sum += term;
        }
        return sum;
    }
    return std::expm1(-y) + y;
}

double snap(double value, double scale) {
    return std::abs(value) <= kSnap * scale ? 0.0 : value;
}

}  // namespace

// ---------------------------------------------------------------- jump measures

bool has_jumps(const JumpFamily& fam) { return !std::holds_alternative<NoJumps>(fam); }

double tail_mass(const JumpFamily& fam, double delta) {
    if (delta < 0) throw ValidationError("tail_mass: negative cutoff");
    return std::visit(overloaded{
        [](const NoJumps&) { return 0.0; },
        [&](const StableJumps& s) {
            return delta == 0.0 ? kInf : s.scale * std::pow(delta, -s.index) / s.index;
        },
        [&](const CompoundPoissonJumps& cp) {
            return std::visit(overloaded{
                [&](const ConstantSize& c) { return c.size > delta ? cp.rate : 0.0; },
                [&](const ExponentialSize& e) { return cp.rate * std::exp(-delta / e.mean); },
            }, cp.size);
        },
    }, fam);
}

double tail_mean(const JumpFamily& fam, double delta, double upper) {
    if (delta < 0 || upper < delta) throw ValidationError("tail_mean: need 0 <= delta <= upper");
    return std::visit(overloaded{
        [](const NoJumps&) { return 0.0; },
        [&](const StableJumps& s) {
            const double a = s.index;
            if (delta == 0.0 && a >= 1.0) return kInf;
            if (upper == kInf) {
                if (a <= 1.0) return kInf;
                return s.scale * std::pow(delta, 1.0 - a) / (a - 1.0);
            }
            return s.scale * (std::pow(delta, 1.0 - a) - std::pow(upper, 1.0 - a)) / (a - 1.0);
        },
        [&](const CompoundPoissonJumps& cp) {
            return std::visit(overloaded{
                [&](const ConstantSize& c) {
                    return (c.size > delta && c.size <= upper) ? cp.rate * c.size : 0.0;
                },
                [&](const ExponentialSize& e) {
                    const double m = e.mean;
                    const double hi = upper == kInf ? 0.0 : (upper + m) * std::exp(-upper / m);
                    return cp.rate * ((delta + m) * std::exp(-delta / m) - hi);
                },
            }, cp.size);
        },
    }, fam);
}

double small_jump_second_moment(const JumpFamily& fam, double delta) {
    if (delta < 0) throw ValidationError("small_jump_second_moment: negative cutoff");
    return std::visit(overloaded{
        [](const NoJumps&) { return 0.0; },
        [&](const StableJumps& s) {
            return s.scale * std::pow(delta, 2.0 - s.index) / (2.0 - s.index);
        },
        [&](const CompoundPoissonJumps& cp) {
            return std::visit(overloaded{
                [&](const ConstantSize& c) { return c.size <= delta ? cp.rate * c.size * c.size : 0.0; },
                [&](const ExponentialSize& e) {
                    if (delta == 0.0) return 0.0;
                    // lambda m^2 * lower incomplete Gamma(3, delta/m)
                    return cp.rate * e.mean * e.mean * 2.0 * boost::math::gamma_p(3.0, delta / e.mean);
                },
            }, cp.size);
        },
    }, fam);
}

double sample_jump(const JumpFamily& fam, double delta, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return std::visit(overloaded{
        [](const NoJumps&) -> double { throw ValidationError("sample_jump: family has no jumps"); },
        [&](const StableJumps& s) -> double {
            if (!(delta > 0)) throw ValidationError("sample_jump: stable family needs a positive cutoff");
            // Pareto tail: P(H > h) = (h/delta)^{-index}.
            return delta * std::pow(1.0 - unif(rng), -1.0 / s.index);
        },
        [&](const CompoundPoissonJumps& cp) -> double {
            return std::visit(overloaded{
                [&](const ConstantSize& c) -> double {
                    if (!(c.size > delta)) throw ValidationError("sample_jump: no mass above cutoff");
                    return c.size;
                },
                [&](const ExponentialSize& e) -> double {
                    return delta + std::exponential_distribution<double>(1.0 / e.mean)(rng);
                },
            }, cp.size);
        },
    }, fam);
}

std::string describe(const JumpFamily& fam) {
    std::ostringstream os;
    std::visit(overloaded{
        [&](const NoJumps&) { os << "none"; },
        [&](const StableJumps& s) { os << "stable(index=" << s.index << ", scale=" << s.scale << ")"; },
        [&](const CompoundPoissonJumps& cp) {
            os << "compound_poisson(rate=" << cp.rate << ", ";
            std::visit(overloaded{
                [&](const ConstantSize& c) { os << "constant=" << c.size; },
                [&](const ExponentialSize& e) { os << "exponential_mean=" << e.mean; },
            }, cp.size);
            os << ")";
        },
    }, fam);
    return os.str();
}

// ---------------------------------------------------------------- Mechanism

Mechanism::Mechanism(MechanismKind kind, double quad, double lin, JumpFamily jumps)
    : kind_(kind), quad_(quad), lin_(lin), jumps_(std::move(jumps)) {
    validate();
    // Shift the compensation of large jumps into the linear coefficient so that
    // the jump part is fully compensated whenever the jump mean is finite.
    double adjust = 0.0;
    if (kind_ == MechanismKind::Branching) {
        std::visit(overloaded{
            [](const NoJumps&) {},
            [&](const StableJumps& s) {
                adjust = s.index < 1.0 ? s.scale / (1.0 - s.index) : -s.scale / (s.index - 1.0);
            },
            [&](const CompoundPoissonJumps& cp) {
                std::visit(overloaded{
                    [&](const ConstantSize& c) { adjust = c.size > 1.0 ? -cp.rate * c.size : 0.0; },
                    [&](const ExponentialSize& e) {
                        adjust = -cp.rate * std::exp(-1.0 / e.mean) * (e.mean + 1.0);
                    },
                }, cp.size);
            },
        }, jumps_);
    }
    drift_ = snap(lin_ + adjust, std::abs(lin_) + std::abs(adjust));
    zero_ = quad_ == 0.0 && drift_ == 0.0 && !has_jumps(jumps_);
    if (kind_ == MechanismKind::Collision && zero_)
        throw ValidationError("collision mechanism must not vanish identically");
    if (const auto* st = std::get_if<StableJumps>(&jumps_)) stable_coef_ = st->scale * boost::math::tgamma(-st->index);
    compute_order();
}

void Mechanism::validate() const {
    if (!(quad_ >= 0.0) || !std::isfinite(quad_)) throw ValidationError("quad must be finite and >= 0");
    if (!std::isfinite(lin_)) throw ValidationError("lin must be finite");
    std::visit(overloaded{
        [](const NoJumps&) {},
        [&](const StableJumps& s) {
            if (!(s.scale > 0.0) || !std::isfinite(s.scale)) throw ValidationError("stable scale must be > 0");
            if (!(s.index > 0.0 && s.index < 2.0)) throw ValidationError("stable index must lie in (0, 2)");
            if (std::abs(s.index - 1.0) < 1e-12)
                throw ValidationError("stable index 1 is not supported (logarithmic Laplace exponent)");
            if (kind_ == MechanismKind::Collision && !(s.index > 1.0))
                throw ValidationError("collision stable index must lie in (1, 2)");
        },
        [&](const CompoundPoissonJumps& cp) {
            if (!(cp.rate > 0.0) || !std::isfinite(cp.rate)) throw ValidationError("jump rate must be > 0");
            std::visit(overloaded{
                [](const ConstantSize& c) {
                    if (!(c.size > 0.0) || !std::isfinite(c.size)) throw ValidationError("jump size must be > 0");
                },
                [](const ExponentialSize& e) {
                    if (!(e.mean > 0.0) || !std::isfinite(e.mean)) throw ValidationError("jump mean must be > 0");
                },
            }, cp.size);
        },
    }, jumps_);
    if (kind_ == MechanismKind::Collision && lin_ < 0.0)
        throw ValidationError("collision mechanism needs lin >= 0 (subcritical or critical)");
}

Mechanism Mechanism::power_collision(double d, double alpha) {
    if (!(d > 0.0)) throw ValidationError("power collision: d must be > 0");
    if (!(alpha >= 1.0 && alpha <= 2.0)) throw ValidationError("power collision: alpha must lie in [1, 2]");
    if (alpha == 1.0) return Mechanism(MechanismKind::Collision, 0.0, d);
    if (alpha == 2.0) return Mechanism(MechanismKind::Collision, d, 0.0);
    const double k = d * alpha * (alpha - 1.0) / std::tgamma(2.0 - alpha);
    Mechanism m(MechanismKind::Collision, 0.0, 0.0, StableJumps{alpha, k});
    for (double x : {0.5, 1.0, 2.0}) {
        const double target = d * std::pow(x, alpha);
        if (std::abs(m.eval_by_quadrature(x) - target) > 1e-8 * target)
            throw NumericalError("power collision: calibration failed the quadrature check");
    }
    return m;
}

Mechanism Mechanism::power_subordinator(double dprime, double beta) {
    if (!(dprime > 0.0)) throw ValidationError("power subordinator: d' must be > 0");
    if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("power subordinator: beta must lie in (0, 1]");
    if (beta == 1.0) return Mechanism(MechanismKind::Branching, 0.0, -dprime);
    const double k = dprime * beta / std::tgamma(1.0 - beta);
    Mechanism m(MechanismKind::Branching, 0.0, -k / (1.0 - beta), StableJumps{beta, k});
    for (double x : {0.5, 1.0, 2.0}) {
        const double target = -dprime * std::pow(x, beta);
        if (std::abs(m.eval_by_quadrature(x) - target) > 1e-8 * std::abs(target))
            throw NumericalError("power subordinator: calibration failed the quadrature check");
    }
    return m;
}

Mechanism Mechanism::power_branching(double d, double alpha) {
    if (!(d > 0.0)) throw ValidationError("power branching: d must be > 0");
    if (!(alpha >= 1.0 && alpha <= 2.0)) throw ValidationError("power branching: alpha must lie in [1, 2]");
    if (alpha == 1.0) return Mechanism(MechanismKind::Branching, 0.0, d);
    if (alpha == 2.0) return Mechanism(MechanismKind::Branching, d, 0.0);
    const double k = d * alpha * (alpha - 1.0) / std::tgamma(2.0 - alpha);
    Mechanism m(MechanismKind::Branching, 0.0, k / (alpha - 1.0), StableJumps{alpha, k});
    for (double x : {0.5, 1.0, 2.0}) {
        const double target = d * std::pow(x, alpha);
        if (std::abs(m.eval_by_quadrature(x) - target) > 1e-8 * target)
            throw NumericalError("power branching: calibration failed the quadrature check");
    }
    return m;
}

double Mechanism::jump_part(double x) const {
    return std::visit(overloaded{
        [](const NoJumps&) { return 0.0; },
        [&](const StableJumps& s) {
            return stable_coef_ * std::pow(x, s.index);
        },
        [&](const CompoundPoissonJumps& cp) {
            return std::visit(overloaded{
                [&](const ConstantSize& c) { return cp.rate * phi(x * c.size); },
                [&](const ExponentialSize& e) {
                    const double xm = x * e.mean;
                    return cp.rate * xm * xm / (1.0 + xm);
                },
            }, cp.size);
        },
    }, jumps_);
}

double Mechanism::jump_part_derivative(double x) const {
    return std::visit(overloaded{
        [](const NoJumps&) { return 0.0; },
        [&](const StableJumps& s) {
            if (x == 0.0) return s.index < 1.0 ? -kInf : 0.0;
            return stable_coef_ * s.index * std::pow(x, s.index - 1.0);
        },
        [&](const CompoundPoissonJumps& cp) {
            return std::visit(overloaded{
                [&](const ConstantSize& c) { return -cp.rate * c.size * std::expm1(-x * c.size); },
                [&](const ExponentialSize& e) {
                    const double m = e.mean, xm = x * m;
                    return cp.rate * m * m * x * (2.0 + xm) / ((1.0 + xm) * (1.0 + xm));
                },
            }, cp.size);
        },
    }, jumps_);
}

double Mechanism::eval(double x) const {
    if (!(x >= 0.0)) throw ValidationError("mechanism evaluated at negative x");
    if (x == 0.0) return 0.0;
    if (x == kInf) {
        const PowerLaw& p = order_.at_infinity;
        return p.exponent > 0.0 && p.coefficient != 0.0 ? std::copysign(kInf, p.coefficient) : p.coefficient;
    }
    return quad_ * x * x + drift_ * x + jump_part(x);
}

double Mechanism::derivative(double x) const {
    if (!(x >= 0.0)) throw ValidationError("mechanism derivative at negative x");
    if (x == 0.0) return derivative_at_zero();
    return 2.0 * quad_ * x + drift_ + jump_part_derivative(x);
}

double Mechanism::derivative_at_zero() const {
    if (const auto* s = std::get_if<StableJumps>(&jumps_); s && s->index < 1.0) return -kInf;
    return drift_;
}

double Mechanism::eval_by_quadrature(double x) const {
    if (!(x >= 0.0)) throw ValidationError("mechanism evaluated at negative x");
    if (x == 0.0) return 0.0;
    const bool branching = kind_ == MechanismKind::Branching;
    const double base = quad_ * x * x + lin_ * x;
    // e^{-xh} - 1 + (compensator), written through phi to avoid cancellation.
    auto kernel = [&](double h) { return phi(x * h) - ((branching && h > 1.0) ? x * h : 0.0); };
    const double jumps = std::visit(overloaded{
        [](const NoJumps&) { return 0.0; },
        [&](const StableJumps& s) {
            const double a = s.index, k = s.scale;
            // In s = ln h, over [ln h_lo, ln h_hi]; both ends handled in closed form.
            const double h_lo = 1e-10 / x, h_hi = 800.0 / x;
            auto f = [&](double u) {
                const double h = std::exp(u);
                return kernel(h) * k * std::pow(h, -a);
            };
            double total = 0.0;
            std::vector<double> breaks{std::log(h_lo), std::log(h_hi)};
            if (branching && h_lo < 1.0 && 1.0 < h_hi) breaks.insert(breaks.begin() + 1, 0.0);
            for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
                total += integrate(f, breaks[i], breaks[i + 1], 1e-13).value;
            // Below h_lo the integrand is x^2 h^2/2 to relative accuracy 1e-10.
            const double small_lin = branching && h_lo > 1.0 ? 0.0 : 1.0;
            total += small_lin * k * x * x * std::pow(h_lo, 2.0 - a) / (2.0 * (2.0 - a));
            // Above h_hi the exponential has died out.
            const double lin_tail = (branching && h_hi > 1.0) ? 0.0 : k * x * std::pow(h_hi, 1.0 - a) / (a - 1.0);
            total += lin_tail - k * std::pow(h_hi, -a) / a;
            return total;
        },
        [&](const CompoundPoissonJumps& cp) {
            return std::visit(overloaded{
                [&](const ConstantSize& c) {
                    const double h = c.size;
                    return cp.rate * (std::exp(-x * h) - 1.0 + ((!branching || h <= 1.0) ? x * h : 0.0));
                },
                [&](const ExponentialSize& e) {
                    const double m = e.mean;
                    auto f = [&](double h) { return kernel(h) * std::exp(-h / m) / m; };
                    const double top = 1.0 + 80.0 * m;
                    double total = 0.0;
                    if (branching) {
                        total += integrate(f, 0.0, 1.0, 1e-13).value;
                        total += integrate(f, 1.0, top, 1e-13).value;
                    } else {
                        total += integrate(f, 0.0, top, 1e-13).value;
                    }
                    return cp.rate * total;
                },
            }, cp.size);
        },
    }, jumps_);
    return base + jumps;
}

void Mechanism::compute_order() {
    order_.exact = true;
    double lin_inf_jump = 0.0, const_inf_jump = 0.0, quad0_jump = 0.0;
    if (const auto* cp = std::get_if<CompoundPoissonJumps>(&jumps_)) {
        std::visit(overloaded{
            [&](const ConstantSize& c) {
                lin_inf_jump = cp->rate * c.size;
                quad0_jump = cp->rate * c.size * c.size / 2.0;
            },
            [&](const ExponentialSize& e) {
                lin_inf_jump = cp->rate * e.mean;
                quad0_jump = cp->rate * e.mean * e.mean;
            },
        }, cp->size);
        const_inf_jump = -cp->rate;
    }
    const auto* st = std::get_if<StableJumps>(&jumps_);
    const double stable_coef = stable_coef_;

    // At infinity.
    PowerLaw inf{0.0, 0.0};
    if (quad_ > 0.0) {
        inf = {2.0, quad_};
    } else if (st && st->index > 1.0) {
        inf = {st->index, stable_coef};
    } else {
        const double L = snap(drift_ + lin_inf_jump, std::abs(drift_) + std::abs(lin_inf_jump));
        if (L != 0.0)
            inf = {1.0, L};
        else if (st)
            inf = {st->index, stable_coef};
        else if (const_inf_jump != 0.0)
            inf = {0.0, const_inf_jump};
    }
    // At zero.
    PowerLaw zero{0.0, 0.0};
    if (st && st->index < 1.0) {
        zero = {st->index, stable_coef};
    } else if (drift_ != 0.0) {
        zero = {1.0, drift_};
    } else if (st) {
        zero = {st->index, stable_coef};
    } else if (quad_ + quad0_jump > 0.0) {
        zero = {2.0, quad_ + quad0_jump};
    }
    order_.at_zero = zero;
    order_.at_infinity = inf;
}

std::string Mechanism::describe() const {
    std::ostringstream os;
    os << (kind_ == MechanismKind::Branching ? "branching" : "collision") << "(quad=" << quad_
       << ", lin=" << lin_ << ", jumps=" << cbc::describe(jumps_) << ")";
    return os.str();
}

// ---------------------------------------------------------------- models

CbcModel::CbcModel(Mechanism sigma_, Mechanism psi_, double x0_, NumericPolicy policy_)
    : sigma(std::move(sigma_)), psi(std::move(psi_)), x0(x0_), policy(policy_) {
    validate();
}

void CbcModel::validate() const {
    if (sigma.kind() != MechanismKind::Collision) throw ValidationError("model.sigma must be a collision mechanism");
    if (psi.kind() != MechanismKind::Branching) throw ValidationError("model.psi must be a branching mechanism");
    if (sigma.is_zero()) throw ValidationError("model.sigma must not vanish");
    if (!(x0 > 0.0) || !std::isfinite(x0)) throw ValidationError("model.x0 must be > 0");
}

CbcModel gbm_model(double growth, double volatility, double x0) {
    return CbcModel(Mechanism(MechanismKind::Collision, volatility * volatility / 2.0, 0.0),
                    Mechanism(MechanismKind::Branching, 0.0, -growth), x0);
}

CbcModel verhulst_model(double a, double c, double mu, double x0) {
    return CbcModel(Mechanism(MechanismKind::Collision, a * a / 2.0, c / 2.0),
                    Mechanism(MechanismKind::Branching, 0.0, -mu), x0);
}

CbcModel power_model(double d, double alpha, double dprime, double beta, double x0) {
    return CbcModel(Mechanism::power_collision(d, alpha), Mechanism::power_subordinator(dprime, beta), x0);
}

// ---------------------------------------------------------------- diagnostics

const char* to_string(PsiClass c) {
    return c == PsiClass::GeneralCase ? "GeneralCase" : "SubordinatorCase";
}

PsiClass psi_class(const Mechanism& psi) {
    if (psi.kind() != MechanismKind::Branching) throw ValidationError("psi_class expects a branching mechanism");
    const PowerLaw& inf = psi.order().at_infinity;
    const bool general = !psi.is_zero() && inf.exponent >= 1.0 && inf.coefficient > 0.0;
    // Sign scan; a positive value contradicting a subordinator verdict is surfaced.
    bool positive = false;
    for (int i = 0; i < 64; ++i) {
        const double x = 1e-6 * std::pow(1e12, i / 63.0);
        const double v = psi.eval(x);
        const double scale = psi.quad() * x * x + std::abs(psi.net_drift() * x) + std::abs(v) + 1e-300;
        if (v > kSnap * scale) positive = true;
    }
    if (!general && positive)
        throw InconclusiveError("psi_class: sign scan finds positive values but the asymptotics say otherwise");
    return general ? PsiClass::GeneralCase : PsiClass::SubordinatorCase;
}

double largest_zero(const Mechanism& psi) {
    if (psi_class(psi) == PsiClass::SubordinatorCase) return kInf;
    if (psi.derivative_at_zero() >= 0.0) return 0.0;
    double hi = 1.0;
    while (psi.eval(hi) <= 0.0) {
        hi *= 2.0;
        if (hi > 1e300) throw NumericalError("largest_zero: no sign change found");
    }
    double lo = hi / 2.0;
    while (psi.eval(lo) > 0.0) {
        lo /= 2.0;
        if (lo < 1e-300) throw NumericalError("largest_zero: no negative value found");
    }
    boost::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve([&](double x) { return psi.eval(x); }, lo, hi,
                                               boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
}

double z_star(const CbcModel& model) {
    const PowerLaw& s = model.sigma.order().at_infinity;
    const PowerLaw& p = model.psi.order().at_infinity;
    const bool sigma_linear = std::abs(s.exponent - 1.0) < kSnap;
    const bool psi_linear = std::abs(p.exponent - 1.0) < kSnap;
    if (sigma_linear && psi_linear && p.coefficient < 0.0) return -p.coefficient / s.coefficient;
    return 0.0;
}

Decision grey_condition(const Mechanism& psi) {
    const PowerLaw& inf = psi.order().at_infinity;
    // Psi(inf) = inf needs a positive coefficient and a growing power.
    if (psi.is_zero() || !(inf.coefficient > 0.0) || !(inf.exponent > 0.0)) return Decision::No;
    const Decision analytic = inf.exponent > 1.0 + kSnap ? Decision::Yes : Decision::No;
    const double rho = largest_zero(psi);
    const double u0 = std::max(1.0, 2.0 * rho);
    const IntegralVerdict num = improper_tail(
        [&](double u) { return -std::log(psi.eval(u)); }, u0, Direction::TowardInfinity);
    if (num.finite() && analytic == Decision::No) return Decision::Inconclusive;
    if (num.divergent() && analytic == Decision::Yes) return Decision::Inconclusive;
    return analytic;
}

Decision dynkin_condition(const Mechanism& psi) {
    const double d0 = psi.derivative_at_zero();
    const bool negative_near_zero = d0 < 0.0 || (d0 == 0.0 && psi.order().at_zero.coefficient < 0.0);
    if (!negative_near_zero)
        throw ValidationError("dynkin_condition: -psi is not positive near 0+, the condition is vacuous");
    const PowerLaw& zero = psi.order().at_zero;
    const Decision analytic = zero.exponent >= 1.0 - kSnap ? Decision::Yes : Decision::No;
    const double rho = largest_zero(psi);
    const double anchor = std::isfinite(rho) ? std::min(1.0, rho / 2.0) : 1.0;
    const IntegralVerdict num = improper_tail(
        [&](double x) { return -std::log(-psi.eval(x)); }, anchor, Direction::TowardZero);
    if (num.finite() && analytic == Decision::Yes) return Decision::Inconclusive;
    if (num.divergent() && analytic == Decision::No) return Decision::Inconclusive;
    return analytic;
}

}  // namespace cbc
