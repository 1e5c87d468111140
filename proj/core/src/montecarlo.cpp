#include <cbc/montecarlo.hpp>

#include <cbc/classifier.hpp>
#include <cbc/eigensolver.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace cbc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t tag(std::uint64_t base, std::uint64_t family, std::uint64_t k) {
    return splitmix64(base ^ splitmix64((family << 32) + k + 1));
}

double laplace_of(double x, double state) {
    if (x == 0.0) return std::isfinite(state) ? 1.0 : 0.0;
    return std::isfinite(state) ? std::exp(-x * state) : 0.0;
}

void require_n(std::size_t n, std::size_t min = 2) {
    if (n < min) throw ValidationError("mc: need n >= " + std::to_string(min) + " replicates");
}

using StartDraw = std::function<double(Rng&)>;

// Observed states of n paths at the sorted times ts: out[i * ts.size() + k].
std::vector<double> observe_paths(const CbcModel& model, Process process, const StartDraw& start,
                                  const std::vector<double>& ts, std::size_t n, const SimConfig& cfg,
                                  const McRun& run) {
    SimConfig c = cfg;
    c.observe = ts;
    std::sort(c.observe.begin(), c.observe.end());
    if (c.observe != ts) throw ValidationError("mc: time grid must be sorted");
    c.horizon = ts.empty() ? 0.0 : ts.back();
    c.record = false;
    c.passage_level.reset();
    c.validate();
    std::vector<double> out(n * ts.size());
    parallel_for(n, run.workers, [&](std::size_t i) {
        PathRng rng = path_rng(run.seed, run.stream, i);
        const double s0 = start(rng.engine);
        const PathSample p = simulate(process, model, s0, c, rng);
        std::copy(p.observed.begin(), p.observed.end(), out.begin() + static_cast<std::ptrdiff_t>(i * ts.size()));
    });
    return out;
}

// result[k][j] = estimate of E[fn(X_{ts[k]}, args[j])].
template <class Fn>
std::vector<std::vector<McEstimate>> functional_grid(const std::vector<double>& obs, std::size_t n,
                                                     std::size_t nt, const std::vector<double>& args, Fn fn,
                                                     const McRun& run) {
    std::vector<std::vector<McEstimate>> res(nt, std::vector<McEstimate>(args.size()));
    std::vector<double> samples(n);
    for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t j = 0; j < args.size(); ++j) {
            for (std::size_t i = 0; i < n; ++i) samples[i] = fn(obs[i * nt + k], args[j]);
            res[k][j] = summarize(samples, run);
        }
    return res;
}

StartDraw fixed(double s) {
    return [s](Rng&) { return s; };
}

StartDraw exponential_start(double rate) {
    return [rate](Rng& g) {
        const double u = static_cast<double>(g() >> 11) * 0x1.0p-53;
        return -std::log1p(-u) / rate;
    };
}

void finish_report(DualityReport& r) {
    r.max_abs_z = 0.0;
    for (const auto* list : {&r.points, &r.composed})
        for (const auto& p : *list) r.max_abs_z = std::max(r.max_abs_z, std::abs(p.z_score));
    r.pass = r.max_abs_z <= r.threshold;
}

}  // namespace

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

McEstimate summarize(const std::vector<double>& samples, const McRun& run) {
    require_n(samples.size());
    McEstimate e;
    e.n = samples.size();
    e.seed = run.seed;
    e.stream = run.stream;
    e.mean = pairwise_sum(samples.data(), e.n) / static_cast<double>(e.n);
    std::vector<double> sq(e.n);
    for (std::size_t i = 0; i < e.n; ++i) {
        const double d = samples[i] - e.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq.data(), e.n) / static_cast<double>(e.n - 1);
    e.se = std::sqrt(var / static_cast<double>(e.n));
    return e;
}

double z_score(const McEstimate& a, const McEstimate& b) {
    const double d = a.mean - b.mean;
    const double s = std::sqrt(a.se * a.se + b.se * b.se);
    if (s == 0.0) return d == 0.0 ? 0.0 : std::copysign(kInf, d);
    return d / s;
}

double z_score(const McEstimate& a, double exact) {
    McEstimate b;
    b.mean = exact;
    return z_score(a, b);
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    constexpr std::size_t chunk = 64;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr err;
    std::mutex mu;
    auto work = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(chunk);
            if (b >= n || failed.load()) return;
            const std::size_t e = std::min(n, b + chunk);
            try {
                for (std::size_t i = b; i < e; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
                failed = true;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned k = std::min<std::size_t>(workers, (n + chunk - 1) / chunk);
    for (unsigned w = 1; w < k; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

McEstimate mc_laplace(const CbcModel& model, Process process, double start, double x, double t, std::size_t n,
                      const SimConfig& cfg, const McRun& run) {
    return mc_laplace_grid(model, process, start, {x}, {t}, n, cfg, run)[0][0];
}

std::vector<std::vector<McEstimate>> mc_laplace_grid(const CbcModel& model, Process process, double start,
                                                     const std::vector<double>& xs, const std::vector<double>& ts,
                                                     std::size_t n, const SimConfig& cfg, const McRun& run) {
    require_n(n, 100);
    for (double x : xs)
        if (!(x >= 0.0)) throw ValidationError("mc_laplace: x must be >= 0");
    const auto obs = observe_paths(model, process, fixed(start), ts, n, cfg, run);
    return functional_grid(obs, n, ts.size(), xs, laplace_of, run);
}

DualityReport check_laplace_duality(const CbcModel& model, const DualityGrid& grid, std::size_t n,
                                    const SimConfig& cfg, const McRun& run, bool allow_uncertified) {
    require_n(n);
    if (!allow_uncertified) {
        const ScaleSpeed ss(model);
        const Decision d = non_explosion_certified(ss);
        if (d != Decision::Yes)
            throw ValidationError("laplace duality: non-explosion is not certified for this model");
    }
    DualityReport r;
    r.kind = "laplace";
    // lhs[j][k][i]: Z from z_j at (t_k, x_i); rhs[i][k][j]: U from x_i at (t_k, z_j).
    std::vector<std::vector<std::vector<McEstimate>>> lhs, rhs;
    for (std::size_t j = 0; j < grid.other.size(); ++j)
        lhs.push_back(mc_laplace_grid(model, Process::Z, grid.other[j], grid.x, grid.t, n, cfg,
                                      run.with_stream(tag(run.stream, 1, j))));
    for (std::size_t i = 0; i < grid.x.size(); ++i)
        rhs.push_back(mc_laplace_grid(model, Process::U, grid.x[i], grid.other, grid.t, n, cfg,
                                      run.with_stream(tag(run.stream, 2, i))));
    for (std::size_t k = 0; k < grid.t.size(); ++k)
        for (std::size_t i = 0; i < grid.x.size(); ++i)
            for (std::size_t j = 0; j < grid.other.size(); ++j) {
                DualityPoint p;
                p.t = grid.t[k];
                p.x = grid.x[i];
                p.other = grid.other[j];
                p.lhs = lhs[j][k][i];
                p.rhs = rhs[i][k][j];
                p.z_score = z_score(p.lhs, p.rhs);
                r.points.push_back(p);
            }
    finish_report(r);
    return r;
}

DualityReport check_siegmund_duality(const CbcModel& model, const DualityGrid& grid, std::size_t n,
                                     const SimConfig& cfg, const McRun& run, bool with_composed) {
    require_n(n);
    {
        const ScaleSpeed ss(model);
        const IntegralStatus sv0 = ss.improper(Improper::SV0).status;
        const IntegralStatus svinf = ss.improper(Improper::SVinf).status;
        if (sv0 == IntegralStatus::Inconclusive || svinf == IntegralStatus::Inconclusive)
            throw InconclusiveError("siegmund duality: S_V verdicts are inconclusive");
        if (sv0 != IntegralStatus::Divergent || svinf != IntegralStatus::Divergent)
            throw ValidationError("siegmund duality: requires S_V(0, x0] = S_V(x0, inf) = inf");
    }
    DualityReport r;
    r.kind = "siegmund";
    const std::size_t nt = grid.t.size();
    auto below = [](double state, double y) { return state < y ? 1.0 : 0.0; };
    auto above = [](double state, double x) { return state > x ? 1.0 : 0.0; };
    std::vector<std::vector<std::vector<McEstimate>>> lhs, rhs;
    for (std::size_t i = 0; i < grid.x.size(); ++i) {
        const McRun sub = run.with_stream(tag(run.stream, 3, i));
        const auto obs = observe_paths(model, Process::U, fixed(grid.x[i]), grid.t, n, cfg, sub);
        lhs.push_back(functional_grid(obs, n, nt, grid.other, below, sub));
    }
    for (std::size_t j = 0; j < grid.other.size(); ++j) {
        const McRun sub = run.with_stream(tag(run.stream, 4, j));
        const auto obs = observe_paths(model, Process::V, fixed(grid.other[j]), grid.t, n, cfg, sub);
        rhs.push_back(functional_grid(obs, n, nt, grid.x, above, sub));
    }
    for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t i = 0; i < grid.x.size(); ++i)
            for (std::size_t j = 0; j < grid.other.size(); ++j) {
                DualityPoint p;
                p.t = grid.t[k];
                p.x = grid.x[i];
                p.other = grid.other[j];
                p.lhs = lhs[i][k][j];
                p.rhs = rhs[j][k][i];
                p.z_score = z_score(p.lhs, p.rhs);
                r.points.push_back(p);
            }
    if (with_composed) {
        // z runs over the same values as y.
        for (std::size_t j = 0; j < grid.other.size(); ++j) {
            const double z = grid.other[j];
            const auto zl = mc_laplace_grid(model, Process::Z, z, grid.x, grid.t, n, cfg,
                                            run.with_stream(tag(run.stream, 5, j)));
            const McRun sub = run.with_stream(tag(run.stream, 6, j));
            const auto obs = observe_paths(model, Process::V, exponential_start(z), grid.t, n, cfg, sub);
            const auto vr = functional_grid(obs, n, nt, grid.x, above, sub);
            for (std::size_t k = 0; k < nt; ++k)
                for (std::size_t i = 0; i < grid.x.size(); ++i) {
                    DualityPoint p;
                    p.t = grid.t[k];
                    p.x = grid.x[i];
                    p.other = z;
                    p.lhs = zl[k][i];
                    p.rhs = vr[k][i];
                    p.z_score = z_score(p.lhs, p.rhs);
                    r.composed.push_back(p);
                }
        }
    }
    finish_report(r);
    return r;
}

McEstimate EmpiricalLaplace::at(double x) const {
    if (!(x >= 0.0)) throw ValidationError("empirical laplace: x must be >= 0");
    std::vector<double> per_path(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) {
        double s = 0.0;
        for (double v : states_[i]) s += laplace_of(x, v);
        per_path[i] = s / static_cast<double>(states_[i].size());
    }
    return summarize(per_path, run_);
}

EmpiricalLaplace mc_stationary(const CbcModel& model, double t_long, double burn_in, std::size_t n,
                               const SimConfig& cfg, const McRun& run, std::size_t samples) {
    require_n(n);
    if (!(t_long > 0.0) || !(burn_in >= 0.0) || burn_in > t_long)
        throw ValidationError("mc_stationary: need 0 <= burn_in <= t_long, t_long > 0");
    if (samples < 1) throw ValidationError("mc_stationary: samples must be >= 1");
    const StationaryVerdict v = stationary_verdict(model);
    if (v.kind != Stationary::Limit)
        throw ValidationError(std::string("mc_stationary: stationary verdict is ") + to_string(v.kind));
    std::vector<double> ts;
    if (samples == 1) {
        ts.push_back(t_long);
    } else {
        for (std::size_t k = 0; k < samples; ++k)
            ts.push_back(burn_in + (t_long - burn_in) * static_cast<double>(k) / static_cast<double>(samples - 1));
    }
    const auto obs = observe_paths(model, Process::Z, fixed(model.x0), ts, n, cfg, run);
    std::vector<std::vector<double>> states(n);
    for (std::size_t i = 0; i < n; ++i) states[i].assign(obs.begin() + static_cast<std::ptrdiff_t>(i * ts.size()),
                                                         obs.begin() + static_cast<std::ptrdiff_t>((i + 1) * ts.size()));
    return EmpiricalLaplace(std::move(states), run);
}

ExtinctionReport mc_extinction(const CbcModel& model, double z0, const std::vector<double>& thetas, std::size_t n,
                               const SimConfig& cfg, const McRun& run, const ExtinctionOptions& opt) {
    require_n(n);
    if (!(z0 > 0.0)) throw ValidationError("mc_extinction: z must be > 0");
    if (thetas.empty()) throw ValidationError("mc_extinction: theta list is empty");
    for (double th : thetas)
        if (!(th > 0.0)) throw ValidationError("mc_extinction: theta must be > 0");

    ExtinctionReport rep;
    rep.z0 = z0;
    std::vector<double> analytic(thetas.size(), std::numeric_limits<double>::quiet_NaN());
    if (opt.analytic) {
        try {
            EigenSolver es(model);
            for (std::size_t k = 0; k < thetas.size(); ++k) analytic[k] = es.extinction_laplace(thetas[k], z0);
        } catch (const std::exception& e) {
            rep.note = std::string("analytic extinction transform unavailable: ") + e.what();
        }
    }
    double horizon = 0.0;
    bool usable = opt.analytic;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        if (!(analytic[k] > 0.0)) {
            usable = false;
            break;
        }
        horizon = std::max(horizon, (std::log(1e6) - std::log(analytic[k])) / thetas[k]);
    }
    rep.censor_horizon = usable ? horizon : cfg.horizon;

    SimConfig c = cfg;
    c.horizon = rep.censor_horizon;
    c.observe.clear();
    c.record = false;
    c.passage_level.reset();

    std::vector<double> zeta(n), tau(n), tau10(n);
    const McRun zr = run.with_stream(tag(run.stream, 7, 0));
    parallel_for(n, run.workers, [&](std::size_t i) {
        PathRng rng = path_rng(zr.seed, zr.stream, i);
        const PathSample p = simulate_cbc(model, z0, c, rng);
        zeta[i] = p.events.extinction_time ? *p.events.extinction_time : kInf;
    });
    const McRun vr = run.with_stream(tag(run.stream, 8, 0));
    if (opt.v_based) {
        const StartDraw draw = exponential_start(z0);
        for (int pass = 0; pass < (opt.cap_rerun ? 2 : 1); ++pass) {
            SimConfig cv = c;
            if (pass == 1) cv.z_cap *= 10.0;
            auto& dst = pass == 0 ? tau : tau10;
            parallel_for(n, run.workers, [&](std::size_t i) {
                PathRng rng = path_rng(vr.seed, vr.stream, i);
                const double y0 = draw(rng.engine);
                const PathSample p = simulate_V(model, y0, cv, rng);
                dst[i] = p.events.explosion_time ? *p.events.explosion_time : kInf;
            });
        }
    }
    std::size_t extinct = 0, exploded = 0;
    for (std::size_t i = 0; i < n; ++i) {
        extinct += std::isfinite(zeta[i]);
        exploded += std::isfinite(tau[i]);
    }
    rep.extinction_frequency = static_cast<double>(extinct) / static_cast<double>(n);
    rep.explosion_frequency = opt.v_based ? static_cast<double>(exploded) / static_cast<double>(n) : 0.0;

    std::vector<double> buf(n);
    auto transform = [&](const std::vector<double>& times, double th, const McRun& r) {
        for (std::size_t i = 0; i < n; ++i) buf[i] = std::isfinite(times[i]) ? std::exp(-th * times[i]) : 0.0;
        return summarize(buf, r);
    };
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        ExtinctionRow row;
        row.theta = thetas[k];
        row.analytic = analytic[k];
        row.z_based = transform(zeta, thetas[k], zr);
        if (opt.v_based) {
            row.v_based = transform(tau, thetas[k], vr);
            if (opt.cap_rerun) row.v_based_cap10 = transform(tau10, thetas[k], vr);
            row.z_zv = z_score(row.z_based, row.v_based);
            if (std::isfinite(row.analytic)) row.z_va = z_score(row.v_based, row.analytic);
        }
        if (std::isfinite(row.analytic)) row.z_za = z_score(row.z_based, row.analytic);
        rep.rows.push_back(row);
    }
    return rep;
}

PassageReport mc_first_passage(const CbcModel& model, Process process, double start, double level,
                               PassageDirection dir, const std::vector<double>& thetas, std::size_t n,
                               const SimConfig& cfg, const McRun& run) {
    require_n(n);
    if (thetas.empty()) throw ValidationError("mc_first_passage: theta list is empty");
    for (double th : thetas)
        if (!(th >= 0.0)) throw ValidationError("mc_first_passage: theta must be >= 0");
    std::vector<double> times(n);
    std::vector<char> hit(n);
    parallel_for(n, run.workers, [&](std::size_t i) {
        PathRng rng = path_rng(run.seed, run.stream, i);
        const PassageTime p = sample_first_passage(model, process, start, level, dir, cfg, rng);
        times[i] = p.time;
        hit[i] = p.hit;
    });
    PassageReport rep;
    rep.thetas = thetas;
    rep.censor_horizon = cfg.horizon;
    std::size_t hits = 0;
    for (char h : hit) hits += h != 0;
    rep.hit_frequency = static_cast<double>(hits) / static_cast<double>(n);
    std::vector<double> buf(n);
    for (double th : thetas) {
        for (std::size_t i = 0; i < n; ++i) buf[i] = hit[i] ? std::exp(-th * times[i]) : 0.0;
        rep.estimates.push_back(summarize(buf, run));
    }
    return rep;
}

}  // namespace cbc
