#include <cbc/error.hpp>
#include <cbc/integrate.hpp>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace cbc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Rule {
    std::array<double, 15> nodes{};       // on [-1, 1]
    std::array<double, 15> kronrod{};
    std::array<double, 15> gauss{};       // zero at non-Gauss nodes
};

const Rule& rule() {
    static const Rule r = [] {
        using K = boost::math::quadrature::gauss_kronrod<double, 15>;
        using G = boost::math::quadrature::gauss<double, 7>;
        const auto& xa = K::abscissa();
        const auto& wk = K::weights();
        const auto& wg = G::weights();
        Rule out;
        out.nodes[7] = 0.0;
        out.kronrod[7] = wk[0];
        out.gauss[7] = wg[0];
        for (int i = 1; i < 8; ++i) {
            out.nodes[7 - i] = -xa[i];
            out.nodes[7 + i] = xa[i];
            out.kronrod[7 - i] = out.kronrod[7 + i] = wk[i];
            const double g = (i % 2 == 0) ? wg[i / 2] : 0.0;
            out.gauss[7 - i] = out.gauss[7 + i] = g;
        }
        return out;
    }();
    return r;
}

struct Panel {
    double a, b;
    double value, err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

struct LogPanel {
    double a, b;
    double shift;   // max of logf on the panel
    double value;   // scaled by e^{-shift}
    double err;     // scaled by e^{-shift}
    double key() const { return err > 0 ? shift + std::log(err) : -kInf; }
    bool operator<(const LogPanel& o) const { return key() < o.key(); }
};

LogPanel log_panel(const std::function<double(double)>& logf, double a, double b) {
    const Rule& r = rule();
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::array<double, 15> lv{};
    double m = -kInf;
    for (int i = 0; i < 15; ++i) {
        lv[i] = logf(c + h * r.nodes[i]);
        if (std::isnan(lv[i])) throw NumericalError("log-integrand returned NaN");
        m = std::max(m, lv[i]);
    }
    LogPanel p{a, b, m, 0.0, 0.0};
    if (m == -kInf) return p;
    if (m == kInf) {
        p.value = kInf;
        return p;
    }
    double k = 0.0, g = 0.0;
    for (int i = 0; i < 15; ++i) {
        const double v = std::exp(lv[i] - m);
        k += r.kronrod[i] * v;
        g += r.gauss[i] * v;
    }
    p.value = k * h;
    p.err = std::abs(k - g) * h;
    return p;
}

}  // namespace

void kronrod15(const std::function<double(double)>& f, double a, double b, double& kronrod, double& gauss) {
    const Rule& r = rule();
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double k = 0.0, g = 0.0;
    for (int i = 0; i < 15; ++i) {
        const double v = f(c + h * r.nodes[i]);
        k += r.kronrod[i] * v;
        g += r.gauss[i] * v;
    }
    kronrod = k * h;
    gauss = g * h;
}

double log_add(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    if (a == kInf || b == kInf) return kInf;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sub(double a, double b) {
    if (b == -kInf) return a;
    if (b > a) throw NumericalError("log_sub: negative difference");
    if (a == b) return -kInf;
    return a + std::log1p(-std::exp(b - a));
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double rel_tol, double abs_tol, int max_panels) {
    QuadResult res;
    if (a == b) return res;
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }
    std::priority_queue<Panel> heap;
    auto make = [&](double lo, double hi) {
        double k, g;
        kronrod15(f, lo, hi, k, g);
        res.evaluations += 15;
        return Panel{lo, hi, k, std::abs(k - g)};
    };
    Panel first = make(a, b);
    double total = first.value, err = first.err;
    heap.push(first);
    int panels = 1;
    while (err > std::max(abs_tol, rel_tol * std::abs(total)) && panels < max_panels) {
        Panel p = heap.top();
        heap.pop();
        const double mid = 0.5 * (p.a + p.b);
        if (mid <= p.a || mid >= p.b) {
            heap.push(p);
            break;
        }
        Panel l = make(p.a, mid), r = make(mid, p.b);
        total += l.value + r.value - p.value;
        err += l.err + r.err - p.err;
        heap.push(l);
        heap.push(r);
        ++panels;
    }
    // Recompute the sums to shed accumulated cancellation.
    total = 0.0;
    err = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        err += heap.top().err;
        heap.pop();
    }
    res.value = sign * total;
    res.abs_err = err;
    if (!std::isfinite(res.value)) throw NumericalError("integrate: non-finite result");
    return res;
}

LogQuadResult log_integrate(const std::function<double(double)>& logf, double a, double b,
                            double rel_tol, int max_panels) {
    LogQuadResult res;
    if (!(b > a)) {
        if (a == b) return res;
        throw NumericalError("log_integrate: reversed interval");
    }
    std::vector<LogPanel> heap;
    // Running sums scaled by e^{-ref}; re-based when a larger panel maximum shows up.
    double ref = -kInf, sum = 0.0, err = 0.0;
    auto weight = [&](const LogPanel& p) { return p.shift == -kInf ? 0.0 : std::exp(p.shift - ref); };
    auto add = [&](const LogPanel& p, double sgn) {
        if (p.value == kInf) return false;
        if (p.shift == -kInf) return true;
        if (p.shift > ref) {
            if (ref != -kInf) {
                const double f = std::exp(ref - p.shift);
                sum *= f;
                err *= f;
            }
            ref = p.shift;
        }
        const double w = weight(p);
        sum += sgn * w * p.value;
        err += sgn * w * p.err;
        return true;
    };
    auto exact_totals = [&]() {
        double s = 0.0, e = 0.0;
        for (const auto& p : heap) {
            const double w = weight(p);
            s += w * p.value;
            e += w * p.err;
        }
        sum = s;
        err = e;
    };
    auto push = [&](const LogPanel& p) {
        heap.push_back(p);
        std::push_heap(heap.begin(), heap.end());
        return add(p, 1.0);
    };
    auto infinite = [&]() {
        res.log_value = kInf;
        res.rel_err = kInf;
        return res;
    };
    if (!push(log_panel(logf, a, b))) return infinite();
    res.evaluations = 15;
    for (int panels = 1;; ++panels) {
        bool done = sum <= 0.0 || err <= rel_tol * sum;
        if (done || panels >= max_panels) {
            exact_totals();
            done = sum <= 0.0 || err <= rel_tol * sum;
            if (done || panels >= max_panels) break;
        }
        std::pop_heap(heap.begin(), heap.end());
        LogPanel p = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (p.a + p.b);
        if (mid <= p.a || mid >= p.b) {
            heap.push_back(p);
            std::push_heap(heap.begin(), heap.end());
            exact_totals();
            break;
        }
        add(p, -1.0);
        if (!push(log_panel(logf, p.a, mid))) return infinite();
        if (!push(log_panel(logf, mid, p.b))) return infinite();
        res.evaluations += 30;
    }
    if (sum <= 0.0) {
        res.log_value = -kInf;
        res.rel_err = 0.0;
    } else {
        res.log_value = ref + std::log(sum);
        res.rel_err = err / sum;
    }
    return res;
}

const char* to_string(IntegralStatus s) {
    switch (s) {
    case IntegralStatus::Finite: return "Finite";
    case IntegralStatus::Divergent: return "Divergent";
    case IntegralStatus::Inconclusive: return "Inconclusive";
    }
    return "?";
}

IntegralVerdict improper_tail(const std::function<double(double)>& log_density, double anchor,
                              Direction dir, const NumericPolicy& policy, bool may_diverge) {
    if (!(anchor > 0.0) || !std::isfinite(anchor)) throw ValidationError("improper_tail: anchor must be positive");
    IntegralVerdict v;
    // In t = ln x the integrand picks up the Jacobian x.
    auto g = [&](double t) { return log_density(std::exp(t)) + t; };
    const double sgn = dir == Direction::TowardInfinity ? 1.0 : -1.0;
    const double t0 = std::log(anchor);
    const double ln2 = std::log(2.0);
    const double log_small = std::log(policy.finite_ratio);
    const double log_grow = std::log1p(policy.growth_factor);
    const double log_nondecr = std::log1p(-policy.growth_factor);

    std::vector<double> incr;  // log increments
    double total = -kInf;
    int small_run = 0, grow_run = 0;
    auto finish_finite = [&](double log_tail, double tail_err) {
        v.status = IntegralStatus::Finite;
        v.log_value = log_add(total, log_tail);
        v.value = std::exp(v.log_value);
        v.abs_err = tail_err + v.value * 10.0 * policy.quad_rel_tol;
        return v;
    };
    for (int k = 1; k <= policy.max_cutoffs; ++k) {
        const double ta = t0 + sgn * (k - 1) * ln2, tb = t0 + sgn * k * ln2;
        const LogQuadResult r = log_integrate(g, std::min(ta, tb), std::max(ta, tb), policy.quad_rel_tol);
        const double d = r.log_value;
        if (d == kInf) {
            if (!may_diverge) {
                v.note = "integrand overflow";
                return v;
            }
            v.status = IntegralStatus::Divergent;
            v.note = "integrand overflow";
            v.value = v.log_value = kInf;
            return v;
        }
        const double prev = total;
        total = log_add(total, d);
        v.cutoffs.push_back(anchor * std::exp(sgn * k * ln2));
        v.log_partial_sums.push_back(total);

        // Converged: increments negligible against the running total.
        if (d == -kInf || d - total <= log_small) {
            if (++small_run >= 3) return finish_finite(-kInf, 0.0);
        } else {
            small_run = 0;
        }
        // Diverging: partial sums keep growing and increments do not shrink.
        if (may_diverge && !incr.empty() && prev > -kInf && total - prev >= log_grow &&
            d - incr.back() >= log_nondecr) {
            if (++grow_run >= 4 && k >= policy.min_divergence_cutoffs) {
                v.status = IntegralStatus::Divergent;
                v.value = v.log_value = kInf;
                v.note = "partial sums grow across consecutive cutoffs";
                return v;
            }
        } else {
            grow_run = 0;
        }
        incr.push_back(d);

        // Exactly geometric increments: sum the tail in closed form.
        if (incr.size() >= 8) {
            const std::size_t n = incr.size();
            double lo = kInf, hi = -kInf;
            bool ok = true;
            for (std::size_t j = n - 6; j < n; ++j) {
                if (!std::isfinite(incr[j]) || !std::isfinite(incr[j - 1])) {
                    ok = false;
                    break;
                }
                const double lr = incr[j] - incr[j - 1];
                lo = std::min(lo, lr);
                hi = std::max(hi, lr);
            }
            if (ok && hi < log_nondecr && hi - lo < 1e-9) {
                const double lr = 0.5 * (lo + hi);
                const double rho = std::exp(lr);
                const double log_tail = d + lr - std::log1p(-rho);
                return finish_finite(log_tail, std::exp(log_tail) * 1e-8);
            }
        }
    }
    // Budget exhausted: accept a stable geometric decay, otherwise give up.
    const std::size_t n = incr.size();
    if (n >= 6) {
        double lo = kInf, hi = -kInf;
        bool ok = true;
        for (std::size_t j = n - 4; j < n; ++j) {
            if (!std::isfinite(incr[j]) || !std::isfinite(incr[j - 1])) {
                ok = false;
                break;
            }
            const double lr = incr[j] - incr[j - 1];
            lo = std::min(lo, lr);
            hi = std::max(hi, lr);
        }
        if (ok && hi < log_nondecr && hi - lo < 1e-3) {
            const double lr = incr[n - 1] - incr[n - 2];
            const double rho = std::exp(lr);
            const double log_tail = incr[n - 1] + lr - std::log1p(-rho);
            const double err = std::exp(log_tail) * std::max(hi - lo, 1e-8) / (1.0 - rho);
            v = finish_finite(log_tail, err);
            v.note = "geometric tail extrapolation";
            return v;
        }
    }
    v.status = IntegralStatus::Inconclusive;
    v.note = "no convergence or divergence pattern within the cutoff budget";
    return v;
}

}  // namespace cbc
