#include <cbc/eigensolver.hpp>

#include <cbc/classifier.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace cbc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Radau IIA, three stages, order 5.
struct RadauTableau {
    std::array<double, 3> c;
    std::array<std::array<double, 3>, 3> a;
    RadauTableau() {
        const double s6 = std::sqrt(6.0);
        c = {(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0};
        a = {{{(88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0},
              {(296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0},
              {(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0}}};
    }
};

const RadauTableau& radau() {
    static const RadauTableau t;
    return t;
}

// dP/dt = c1 P - P^2 + c2 with t = ln x, P = x h'/h.
struct Coeffs {
    double c1, c2;
    double weight;  // Sigma / (theta x^2): converts a defect in P into a relative residual
};

class Riccati {
public:
    Riccati(const CbcModel& m, double theta) : m_(m), theta_(theta) {}

    Coeffs at(double t) const {
        const double x = std::exp(t);
        const double s = m_.sigma.eval(x);
        const double r = x / s;
        const double c1 = 1.0 - r * (m_.sigma.derivative(x) + m_.psi.eval(x));
        const double c2 = theta_ * x * r;
        return {c1, c2, 1.0 / c2};
    }

    static double rhs(const Coeffs& c, double p) { return p * c.c1 - p * p + c.c2; }

private:
    const CbcModel& m_;
    double theta_;
};

struct StepOutcome {
    bool ok = false;
    double p1 = 0.0, dy = 0.0, f1 = 0.0, defect = 0.0;
};

void solve3(std::array<std::array<double, 3>, 3> m, std::array<double, 3>& b) {
    for (int k = 0; k < 3; ++k) {
        int piv = k;
        for (int i = k + 1; i < 3; ++i)
            if (std::abs(m[i][k]) > std::abs(m[piv][k])) piv = i;
        std::swap(m[k], m[piv]);
        std::swap(b[k], b[piv]);
        for (int i = k + 1; i < 3; ++i) {
            const double f = m[i][k] / m[k][k];
            for (int j = k; j < 3; ++j) m[i][j] -= f * m[k][j];
            b[i] -= f * b[k];
        }
    }
    for (int k = 2; k >= 0; --k) {
        for (int j = k + 1; j < 3; ++j) b[k] -= m[k][j] * b[j];
        b[k] /= m[k][k];
    }
}

StepOutcome radau_step(const Riccati& eq, double t, double p, double h) {
    const RadauTableau& rt = radau();
    std::array<Coeffs, 3> co;
    for (int i = 0; i < 3; ++i) co[i] = eq.at(t + rt.c[i] * h);
    const double f0 = Riccati::rhs(eq.at(t), p);
    std::array<double, 3> z{}, f{}, jac{};
    for (int i = 0; i < 3; ++i) z[i] = rt.c[i] * h * f0;

    bool converged = false;
    for (int it = 0; it < 40 && !converged; ++it) {
        for (int i = 0; i < 3; ++i) {
            const double u = p + z[i];
            f[i] = Riccati::rhs(co[i], u);
            jac[i] = co[i].c1 - 2.0 * u;
        }
        std::array<double, 3> r{};
        std::array<std::array<double, 3>, 3> m{};
        for (int i = 0; i < 3; ++i) {
            double s = 0.0;
            for (int j = 0; j < 3; ++j) {
                s += rt.a[i][j] * f[j];
                m[i][j] = (i == j ? 1.0 : 0.0) - h * rt.a[i][j] * jac[j];
            }
            r[i] = -(z[i] - h * s);
        }
        solve3(m, r);
        double dmax = 0.0, scale = std::abs(p);
        for (int i = 0; i < 3; ++i) {
            z[i] += r[i];
            dmax = std::max(dmax, std::abs(r[i]));
            scale = std::max(scale, std::abs(p + z[i]));
        }
        if (!std::isfinite(dmax)) return {};
        converged = dmax <= 1e-14 * scale + 1e-300;
    }
    if (!converged) return {};

    StepOutcome out;
    out.ok = true;
    out.p1 = p + z[2];
    // y increment by the collocation quadrature (weights = last row of A).
    out.dy = h * (rt.a[2][0] * (p + z[0]) + rt.a[2][1] * (p + z[1]) + rt.a[2][2] * (p + z[2]));
    out.f1 = Riccati::rhs(co[2], out.p1);

    // Defect of the collocation polynomial between its nodes.
    const std::array<double, 4> s{0.0, rt.c[0], rt.c[1], 1.0};
    const std::array<double, 4> v{p, p + z[0], p + z[1], p + z[2]};
    for (double q : {0.5 * rt.c[0], 0.5 * (rt.c[0] + rt.c[1]), 0.5 * (rt.c[1] + 1.0)}) {
        double u = 0.0, du = 0.0;
        for (int i = 0; i < 4; ++i) {
            double li = 1.0, dli = 0.0;
            for (int j = 0; j < 4; ++j) {
                if (j == i) continue;
                const double den = s[i] - s[j];
                dli = dli * (q - s[j]) / den + li / den;
                li *= (q - s[j]) / den;
            }
            u += v[i] * li;
            du += v[i] * dli;
        }
        const Coeffs cq = eq.at(t + q * h);
        const double d = std::abs(du / h - Riccati::rhs(cq, u)) * cq.weight;
        out.defect = std::max(out.defect, d);
    }
    return out;
}

// Quintic Hermite interpolation of y on [t0, t1] from y, y' = P and y'' = P'.
double hermite5(double s, double h, double y0, double y1, double d0, double d1, double s0, double s1) {
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    const double h0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
    const double h1 = s - 6 * s3 + 8 * s4 - 3 * s5;
    const double h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    const double h3 = 0.5 * s3 - s4 + 0.5 * s5;
    const double h4 = -4 * s3 + 7 * s4 - 3 * s5;
    const double h5 = 10 * s3 - 15 * s4 + 6 * s5;
    return h0 * y0 + h1 * h * d0 + h2 * h * h * s0 + h3 * h * h * s1 + h4 * h * d1 + h5 * y1;
}

double hermite3(double s, double h, double p0, double p1, double d0, double d1) {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * h * d1;
}

// One integration run: nodes (t, y, P, P') starting at the base point with P = 0.
struct Track {
    std::vector<double> t, y, p, dp;
    double residual = 0.0;
    double step = 1e-3;
};

void advance(const Riccati& eq, Track& tr, double t_end, const EigenOptions& opt) {
    while (tr.t.back() < t_end) {
        const double t = tr.t.back();
        const double room = t_end - t;
        double h = std::min({tr.step, opt.max_step, room});
        const bool clipped = h == room;
        const StepOutcome s = radau_step(eq, t, tr.p.back(), h);
        if (!s.ok || s.defect > opt.step_target) {
            const double shrink = s.ok ? std::max(0.1, 0.9 * std::pow(opt.step_target / s.defect, 0.25)) : 0.25;
            tr.step = h * shrink;
            if (tr.step < 1e-12) throw NumericalError("eigensolver: step size underflow");
            continue;
        }
        const double tn = clipped ? t_end : t + h;
        tr.t.push_back(tn);
        tr.y.push_back(tr.y.back() + s.dy);
        tr.p.push_back(s.p1);
        tr.dp.push_back(s.f1);
        tr.residual = std::max(tr.residual, s.defect);
        if (!clipped || h >= tr.step) {
            const double grow = s.defect > 0 ? 0.9 * std::pow(opt.step_target / s.defect, 0.25) : 3.0;
            tr.step = h * std::clamp(grow, 0.2, 3.0);
        }
    }
}

double track_log_h(const Track& tr, double t) {
    const auto it = std::upper_bound(tr.t.begin(), tr.t.end(), t);
    if (it == tr.t.begin()) return tr.y.front();
    if (it == tr.t.end()) return tr.y.back();
    const std::size_t i = static_cast<std::size_t>(it - tr.t.begin()) - 1;
    const double h = tr.t[i + 1] - tr.t[i];
    return hermite5((t - tr.t[i]) / h, h, tr.y[i], tr.y[i + 1], tr.p[i], tr.p[i + 1], tr.dp[i], tr.dp[i + 1]);
}

}  // namespace

// ---------------------------------------------------------------- EigenSolution

std::vector<double> EigenSolution::grid() const {
    std::vector<double> x(t_.size());
    std::transform(t_.begin(), t_.end(), x.begin(), [](double t) { return std::exp(t); });
    return x;
}

std::vector<double> EigenSolution::values() const {
    std::vector<double> v(y_.size());
    std::transform(y_.begin(), y_.end(), v.begin(), [](double y) { return std::exp(y); });
    return v;
}

std::vector<double> EigenSolution::flux() const { return flux_; }

double EigenSolution::tail_log_h(double x) const {
    const double lr = std::log(x) - t_.back();
    const double pt = p_.back();
    if (std::abs(kappa_) < 1e-12) return y_.back() + pt * lr;
    return y_.back() + pt / kappa_ * std::expm1(kappa_ * lr);
}

double EigenSolution::log_h(double x) const {
    if (!(x >= 0.0)) throw ValidationError("h: x must be >= 0");
    if (x <= eps_) return y_.front();
    const double t = std::log(x);
    if (t >= t_.back()) return tail_log_h(x);
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
    const double h = t_[i + 1] - t_[i];
    return hermite5((t - t_[i]) / h, h, y_[i], y_[i + 1], p_[i], p_[i + 1], dp_[i], dp_[i + 1]);
}

double EigenSolution::log_derivative(double x) const {
    if (!(x > 0.0)) throw ValidationError("h: x must be > 0");
    if (x <= eps_) return 0.0;
    const double t = std::log(x);
    if (t >= t_.back()) return p_.back() * std::pow(x / x_max(), kappa_);
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
    const double h = t_[i + 1] - t_[i];
    return hermite3((t - t_[i]) / h, h, p_[i], p_[i + 1], dp_[i], dp_[i + 1]);
}

double EigenSolution::log_h_inf() const {
    const double pt = p_.back();
    if (pt == 0.0) return y_.back();
    if (kappa_ < 0.0) return y_.back() - pt / kappa_;
    return kInf;
}

// ---------------------------------------------------------------- EigenSolver

EigenSolver::EigenSolver(std::shared_ptr<const ScaleSpeed> ss, EigenOptions opt)
    : ss_(std::move(ss)), opt_(opt) {
    z_star_ = z_star(ss_->model());
    certified_ = cbc::non_explosion_certified(*ss_) == Decision::Yes;
}

EigenSolver::EigenSolver(const CbcModel& model, EigenOptions opt)
    : EigenSolver(std::make_shared<const ScaleSpeed>(model), opt) {}

std::shared_ptr<const EigenSolution> EigenSolver::solve(double theta) const {
    {
        std::lock_guard<std::mutex> lock(mu_);
        const auto it = cache_.find(theta);
        if (it != cache_.end()) return it->second;
    }
    std::shared_ptr<const EigenSolution> sol = compute(theta);
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.emplace(theta, std::move(sol)).first->second;
}

std::shared_ptr<EigenSolution> EigenSolver::compute(double theta) const {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw ValidationError("theta must be > 0");
    const CbcModel& m = ss_->model();
    const double x0 = m.x0;
    const double t0 = std::log(x0);
    const double t_start = std::log(x0 * opt_.xmax_start);
    const Riccati eq(m, theta);

    // Checkpoints where successive base points are compared.
    std::vector<double> above, below;
    for (double x = x0; x <= x0 * opt_.xmax_start * (1 + 1e-12); x *= 2.0) above.push_back(std::log(x));
    for (double x = x0 / 2; x > x0 * 1e-6; x /= 2.0) below.push_back(std::log(x));

    auto run = [&](double eps) {
        Track tr;
        tr.t = {std::log(eps)};
        tr.y = {0.0};
        tr.p = {0.0};
        tr.dp = {Riccati::rhs(eq.at(tr.t[0]), 0.0)};
        tr.step = 1e-3;
        advance(eq, tr, t0, opt_);
        const double y0 = tr.y.back();
        for (double& y : tr.y) y -= y0;
        advance(eq, tr, t_start, opt_);
        return tr;
    };

    double eps = x0 * opt_.eps_start;
    Track prev = run(eps);
    Track cur;
    bool stable = false;
    while (!stable) {
        const double next = eps * opt_.eps_factor;
        if (next < x0 * opt_.eps_floor)
            throw NumericalError("initial-condition sensitivity (boundary 0 possibly regular/exit)");
        cur = run(next);
        stable = true;
        for (double t : above) {
            const double a = track_log_h(cur, t), b = track_log_h(prev, t);
            if (std::abs(a - b) > opt_.eps_tol * (1.0 + std::abs(a))) stable = false;
        }
        for (double t : below) {
            if (t < prev.t.front() + std::log(100.0)) break;
            const double a = std::exp(track_log_h(cur, t)), b = std::exp(track_log_h(prev, t));
            if (std::abs(a - b) > opt_.eps_tol) stable = false;
        }
        eps = next;
        prev = std::move(cur);
    }
    Track& tr = prev;

    // Push X_max out until the growth order d ln P / d ln x settles.
    auto order_at_end = [&]() {
        const double p = tr.p.back();
        return p > 0.0 ? tr.dp.back() / p : 0.0;
    };
    double kappa = order_at_end();
    bool settled = false;
    double tx = t_start;
    const double t_cap = std::log(x0 * opt_.xmax_cap);
    while (tx < t_cap - 1e-12) {
        tx = std::min(tx + std::log(2.0), t_cap);
        advance(eq, tr, tx, opt_);
        const double k = order_at_end();
        if (std::abs(k - kappa) < opt_.order_tol) {
            kappa = k;
            settled = true;
            break;
        }
        kappa = k;
    }

    auto sol = std::make_shared<EigenSolution>();
    sol->theta_ = theta;
    sol->x0_ = x0;
    sol->eps_ = eps;
    sol->t_ = std::move(tr.t);
    sol->y_ = std::move(tr.y);
    sol->p_ = std::move(tr.p);
    sol->dp_ = std::move(tr.dp);
    sol->residual_ = tr.residual;
    sol->kappa_ = kappa;
    sol->tail_converged_ = settled;
    sol->certified_ = certified_;
    sol->flux_.resize(sol->t_.size());
    for (std::size_t i = 0; i < sol->t_.size(); ++i) {
        const double x = std::exp(sol->t_[i]);
        sol->flux_[i] = m.sigma.eval(x) * sol->p_[i] * std::exp(sol->y_[i]) / x;
    }
    if (!certified_) sol->warning_ = "non-explosion not certified: uniqueness of h is not guaranteed";
    if (!settled) {
        if (!sol->warning_.empty()) sol->warning_ += "; ";
        sol->warning_ += "growth order of h did not settle before the X_max cap";
    }
    if (sol->residual_ > opt_.residual_tol) throw NumericalError("eigensolver: residual above tolerance");
    return sol;
}

void EigenSolver::check_z(double z) const {
    if (!(z > z_star_)) throw ValidationError("argument must exceed z*");
}

double EigenSolver::log_f_theta(double theta, double z) const {
    check_z(z);
    const auto sol = solve(theta);
    const EigenSolution& s = *sol;
    const auto& t = s.t_;
    // [0, eps]: h extended by h(eps).
    double total = s.y_.front() + std::log(-std::expm1(-z * s.eps_)) - std::log(z);
    bool cut = false;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        const double h = t[i + 1] - t[i];
        auto g = [&](double tt) {
            const double y = hermite5((tt - t[i]) / h, h, s.y_[i], s.y_[i + 1], s.p_[i], s.p_[i + 1], s.dp_[i],
                                      s.dp_[i + 1]);
            return -z * std::exp(tt) + y + tt;
        };
        total = log_add(total, log_integrate(g, t[i], t[i + 1], opt_.laplace_rel_tol).log_value);
        // Past the peak and far below the running total: the rest cannot matter.
        const double xe = std::exp(t[i + 1]);
        if (-z * xe + s.p_[i + 1] + 1.0 < 0.0 && g(t[i + 1]) < total - 80.0) {
            cut = true;
            break;
        }
    }
    if (!cut) {
        const IntegralVerdict tail =
            improper_tail([&](double v) { return -z * v + s.tail_log_h(v); }, s.x_max(), Direction::TowardInfinity);
        if (tail.divergent()) throw ValidationError("f_theta: Laplace integral diverges (z at or below the growth rate)");
        if (tail.inconclusive()) throw InconclusiveError("f_theta: tail of the Laplace integral not resolved");
        total = log_add(total, tail.log_value);
    }
    return std::log(z) + total;
}

double EigenSolver::f_theta_alternative(double theta, double z) const {
    check_z(z);
    const auto sol = solve(theta);
    const EigenSolution& s = *sol;
    const auto& t = s.t_;
    double total = -kInf;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        const double h = t[i + 1] - t[i];
        auto g = [&](double tt) {
            const double u = (tt - t[i]) / h;
            const double p = hermite3(u, h, s.p_[i], s.p_[i + 1], s.dp_[i], s.dp_[i + 1]);
            if (!(p > 0.0)) return -kInf;
            const double y = hermite5(u, h, s.y_[i], s.y_[i + 1], s.p_[i], s.p_[i + 1], s.dp_[i], s.dp_[i + 1]);
            return -z * std::exp(tt) + y + std::log(p);
        };
        total = log_add(total, log_integrate(g, t[i], t[i + 1], opt_.laplace_rel_tol).log_value);
    }
    const double pt = s.p_.back(), xm = s.x_max();
    if (pt > 0.0) {
        const IntegralVerdict tail = improper_tail(
            [&](double v) {
                return -z * v + s.tail_log_h(v) + std::log(pt) + s.kappa_ * std::log(v / xm) - std::log(v);
            },
            xm, Direction::TowardInfinity);
        if (!tail.finite()) throw InconclusiveError("f_theta_alternative: tail not resolved");
        total = log_add(total, tail.log_value);
    }
    return std::exp(s.y_.front()) + std::exp(total);
}

double EigenSolver::fpt_laplace(double theta, double z, double a) const {
    check_z(a);
    if (!(z >= a)) throw ValidationError("fpt_laplace: need level <= z");
    if (z == a) return 1.0;
    return std::exp(log_f_theta(theta, z) - log_f_theta(theta, a));
}

double EigenSolver::extinction_laplace(double theta, double z) const {
    check_z(z);
    const IntegralVerdict& feller = ss_->improper(Improper::FellerI);
    if (feller.inconclusive()) throw InconclusiveError("extinction: Feller integral verdict is inconclusive");
    if (feller.divergent()) return 0.0;
    const auto sol = solve(theta);
    const double lhi = sol->log_h_inf();
    if (!std::isfinite(lhi))
        throw InconclusiveError("extinction: h does not level off although the Feller integral is finite");
    return std::min(1.0, std::exp(log_f_theta(theta, z) - lhi));
}

std::shared_ptr<const EigenSolution> solve_h(const CbcModel& model, double theta, EigenOptions opt) {
    EigenSolver s(model, opt);
    return s.solve(theta);
}

// ---------------------------------------------------------------- CB oracles

namespace {

// int_{from}^{to} theta / Psi(u) du with u = shift + e^s, both endpoints above shift.
double shifted_integral(const Mechanism& psi, double theta, double shift, double from, double to, double sign) {
    if (from == to) return 0.0;
    auto g = [&](double s) {
        const double w = std::exp(s);
        return sign * theta * w / psi.eval(shift + w);
    };
    return integrate(g, std::log(from - shift), std::log(to - shift), 1e-12).value;
}

double rho_of(const Mechanism& psi) {
    const double r = largest_zero(psi);
    return std::isfinite(r) ? r : kInf;
}

}  // namespace

double cb_oracle_h(const Mechanism& psi, double theta, double v, double x0) {
    if (!(theta > 0.0)) throw ValidationError("cb_oracle_h: theta must be > 0");
    if (psi.is_zero() || psi_class(psi) != PsiClass::GeneralCase)
        throw ValidationError("cb_oracle_h: Psi must take positive values");
    const double rho = rho_of(psi);
    if (!(v > rho) || !(x0 > rho)) throw ValidationError("cb_oracle_h: v and x0 must exceed the largest zero of Psi");
    return std::exp(shifted_integral(psi, theta, rho, x0, v, 1.0));
}

double cb_oracle_f(const Mechanism& psi, double theta, double z, double x0) {
    if (!(z > 0.0)) throw ValidationError("cb_oracle_f: z must be > 0");
    if (psi.is_zero() || psi_class(psi) != PsiClass::GeneralCase)
        throw ValidationError("cb_oracle_f: Psi must take positive values");
    const double rho = rho_of(psi);
    if (!(x0 > rho)) throw ValidationError("cb_oracle_f: x0 must exceed the largest zero of Psi");
    // In w = v - rho.
    auto logd = [&](double w) { return -z * (rho + w) + shifted_integral(psi, theta, rho, x0, rho + w, 1.0); };
    const IntegralVerdict lo = improper_tail(logd, x0 - rho, Direction::TowardZero);
    const IntegralVerdict hi = improper_tail(logd, x0 - rho, Direction::TowardInfinity);
    if (!lo.finite() || !hi.finite()) throw InconclusiveError("cb_oracle_f: integral not resolved");
    return z * std::exp(log_add(lo.log_value, hi.log_value));
}

double cb_oracle_fbar(const Mechanism& psi, double theta, double z, double x0) {
    const double d0 = psi.derivative_at_zero();
    if (!(d0 < 0.0)) throw ValidationError("cb_oracle_fbar: Psi must be supercritical");
    if (!(theta > 0.0 && theta < -d0)) throw ValidationError("cb_oracle_fbar: need 0 < theta < -Psi'(0+)");
    if (!(z >= 0.0)) throw ValidationError("cb_oracle_fbar: z must be >= 0");
    const double rho = psi_class(psi) == PsiClass::SubordinatorCase ? kInf : largest_zero(psi);
    if (!(x0 > 0.0 && x0 < rho)) throw ValidationError("cb_oracle_fbar: x0 must lie in (0, rho)");
    if (z == 0.0) return 0.0;
    // exp(int_x^{x0} theta/(-Psi)) on (0, rho).
    auto inner = [&](double x) {
        auto g = [&](double s) {
            const double u = std::exp(s);
            return theta * u / (-psi.eval(u));
        };
        if (x <= x0) return integrate(g, std::log(x), std::log(x0), 1e-12).value;
        if (!std::isfinite(rho)) return -integrate(g, std::log(x0), std::log(x), 1e-12).value;
        // Toward rho use u = rho - e^s to resolve the pole.
        auto gr = [&](double s) {
            const double w = std::exp(s);
            return theta * w / (-psi.eval(rho - w));
        };
        return -integrate(gr, std::log(rho - x), std::log(rho - x0), 1e-12).value;
    };
    const IntegralVerdict lo =
        improper_tail([&](double x) { return -z * x + inner(x); }, x0, Direction::TowardZero);
    IntegralVerdict hi;
    if (std::isfinite(rho))
        hi = improper_tail([&](double w) { return -z * (rho - w) + inner(rho - w); }, rho - x0, Direction::TowardZero);
    else
        hi = improper_tail([&](double x) { return -z * x + inner(x); }, x0, Direction::TowardInfinity);
    if (!lo.finite() || !hi.finite()) throw InconclusiveError("cb_oracle_fbar: integral not resolved");
    return z * std::exp(log_add(lo.log_value, hi.log_value));
}

}  // namespace cbc
