#pragma once

#include <cbc/mechanism.hpp>
#include <cbc/quadrature.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace cbc {

struct EigenOptions {
    double residual_tol = 1e-6;     // acceptance bound on the relative ODE residual
    double step_target = 1e-8;      // per-step defect target used by the step controller
    double max_step = 0.05;         // in t = ln x
    double eps_start = 1e-4;        // first base point, relative to x0
    double eps_factor = 1e-2;       // geometric refinement of the base point
    double eps_floor = 1e-200;      // give up below this (relative to x0)
    double eps_tol = 1e-8;          // change of log h on [x0, X_max] accepted as stable
    double xmax_start = 1e3;        // relative to x0
    double xmax_cap = 1e8;          // relative to x0
    double order_tol = 1e-4;        // stability of the fitted growth order per doubling
    double laplace_rel_tol = 1e-10;
};

// Increasing solution of Sigma h'' + (Sigma' + Psi) h' = theta h with zero flux at
// the base point eps, normalized h(x0) = 1. Stored through P = x h'/h on a grid in
// t = ln x together with y = ln h.
class EigenSolution {
public:
    double theta() const { return theta_; }
    double x0() const { return x0_; }
    double eps() const { return eps_; }
    double x_max() const { return std::exp(t_.back()); }

    std::vector<double> grid() const;            // abscissae x
    std::vector<double> values() const;          // h on the grid
    std::vector<double> flux() const;            // g = Sigma h' on the grid
    const std::vector<double>& log_values() const { return y_; }
    const std::vector<double>& log_slope() const { return p_; }  // P = x h'/h

    double log_h(double x) const;
    double h(double x) const { return std::exp(log_h(x)); }
    double operator()(double x) const { return h(x); }
    // d ln h / d ln x.
    double log_derivative(double x) const;

    // Max over the grid of |Sigma h'' + (Sigma' + Psi) h' - theta h| / (theta h).
    double residual() const { return residual_; }

    // Tail model y(x) = y_T + (P_T / kappa) ((x / X)^kappa - 1) beyond X = x_max().
    double tail_order() const { return kappa_; }
    bool tail_converged() const { return tail_converged_; }
    // log h(inf); +inf when h is unbounded.
    double log_h_inf() const;

    bool non_explosion_certified() const { return certified_; }
    const std::string& warning() const { return warning_; }

private:
    friend class EigenSolver;
    double theta_ = 0.0, x0_ = 1.0, eps_ = 0.0;
    std::vector<double> t_, y_, p_, dp_, flux_;
    double residual_ = 0.0;
    double kappa_ = 0.0;
    bool tail_converged_ = false;
    bool certified_ = false;
    std::string warning_;

    double tail_log_h(double x) const;
};

class EigenSolver {
public:
    explicit EigenSolver(std::shared_ptr<const ScaleSpeed> ss, EigenOptions opt = {});
    explicit EigenSolver(const CbcModel& model, EigenOptions opt = {});

    const ScaleSpeed& scale_speed() const { return *ss_; }
    const EigenOptions& options() const { return opt_; }

    // Cached per theta.
    std::shared_ptr<const EigenSolution> solve(double theta) const;

    // f_theta(z) = z int_0^inf e^{-zv} h_theta(v) dv, z > z*.
    double log_f_theta(double theta, double z) const;
    double f_theta(double theta, double z) const { return std::exp(log_f_theta(theta, z)); }
    // h(0+) + int_0^inf e^{-zv} h'(v) dv: the same quantity by a different route.
    double f_theta_alternative(double theta, double z) const;

    // E_z[exp(-theta zeta_a)], z* < a <= z.
    double fpt_laplace(double theta, double z, double a) const;
    // E_z[exp(-theta zeta_0)] = f_theta(z) / h_theta(inf); 0 when h is unbounded.
    double extinction_laplace(double theta, double z) const;

    bool non_explosion_certified() const { return certified_; }

private:
    std::shared_ptr<EigenSolution> compute(double theta) const;
    void check_z(double z) const;

    std::shared_ptr<const ScaleSpeed> ss_;
    EigenOptions opt_;
    double z_star_ = 0.0;
    bool certified_ = false;
    mutable std::mutex mu_;
    mutable std::map<double, std::shared_ptr<const EigenSolution>> cache_;
};

std::shared_ptr<const EigenSolution> solve_h(const CbcModel& model, double theta, EigenOptions opt = {});

// Collision-free oracles (Sigma = 0); rho is the largest zero of Psi.
// exp(int_{x0}^v theta / Psi) for v, x0 > rho; Psi must take positive values.
double cb_oracle_h(const Mechanism& psi, double theta, double v, double x0 = 1.0);
// z int_rho^inf e^{-zv} cb_oracle_h(v) dv; ratios f(z)/f(a) are CB passage transforms.
double cb_oracle_f(const Mechanism& psi, double theta, double z, double x0 = 1.0);
// Increasing eigenfunction of the CB generator for supercritical Psi (Psi'(0+) < 0),
// z int_0^rho e^{-zx} exp(int_x^{x0} theta/(-Psi)) dx with rho = sup{Psi < 0},
// x0 in (0, rho), theta < -Psi'(0+). Bounded in z iff int_{0+} du/(-Psi) < inf.
double cb_oracle_fbar(const Mechanism& psi, double theta, double z, double x0);

}  // namespace cbc
