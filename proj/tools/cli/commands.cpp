#include "commands.hpp"

#include "output.hpp"

#include <cbc/classifier.hpp>
#include <cbc/eigensolver.hpp>
#include <cbc/montecarlo.hpp>
#include <cbc/quadrature.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>

namespace cbc::cli {

namespace {

using Row = Output::Row;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::string kCmd = "command";

std::string cmd_path(const std::string& key) { return kCmd + "." + key; }

std::string opt_num(double v) { return std::isnan(v) ? std::string() : num(v); }

// Prefix for per-model artifact names; empty for single-model configs.
std::string prefix(const RunConfig& rc, std::size_t i) { return rc.models.size() > 1 ? rc.models[i].name + "_" : ""; }

std::vector<double> require_list(const json& cmd, const std::string& key, std::optional<std::vector<double>> fallback = {}) {
    auto v = get_numbers(cmd, key, kCmd, std::move(fallback));
    if (v.empty()) throw ConfigError(cmd_path(key), "empty list");
    return v;
}

std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> x(points);
    for (int i = 0; i < points; ++i)
        x[i] = points == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (points - 1));
    return x;
}

McRun mc_run(const RunConfig& rc, std::uint64_t stream) { return McRun{rc.require_seed(), stream, rc.mc.workers}; }

bool inconclusive(Attraction a) { return a == Attraction::Inconclusive; }

const char* source(const IntegralVerdict& v) { return v.analytic ? "analytic" : "numeric"; }

// ---- classify ----

struct Classified {
    std::shared_ptr<const ScaleSpeed> ss;
    BoundaryReport report;
};

Classified classify_into(const std::string& name, const CbcModel& model, Output& out, std::vector<Row>& rows,
                         bool named) {
    Classified c{std::make_shared<const ScaleSpeed>(model), {}};
    c.report = classify(*c.ss);
    const BoundaryReport& r = c.report;
    const std::string key_prefix = named ? name + "." : "";
    auto add = [&](const std::string& field, const std::string& value, const std::string& prov) {
        rows.push_back({name, field, value, prov});
        out.note(key_prefix + field, value);
    };
    add("sigma", '"' + model.sigma.describe() + '"', "input");
    add("psi", '"' + model.psi.describe() + '"', "input");
    add("x0", num(model.x0), "input");
    add("z_star", num(r.z_star), "closed_form");
    add("psi_class", to_string(r.psi_class), "closed_form");
    add("psi_zero", r.psi_zero ? "true" : "false", "closed_form");
    const std::pair<Improper, IntegralStatus BoundaryReport::*> integrals[] = {
        {Improper::SV0, &BoundaryReport::sv0},         {Improper::SVinf, &BoundaryReport::svinf},
        {Improper::MV0, &BoundaryReport::mv0},         {Improper::MVinf, &BoundaryReport::mvinf},
        {Improper::FellerI, &BoundaryReport::feller_i}, {Improper::PsiSigma0, &BoundaryReport::psi_sigma0},
    };
    for (const auto& [which, member] : integrals) {
        const IntegralVerdict& v = c.ss->improper(which);
        std::string label = to_string(which);
        std::transform(label.begin(), label.end(), label.begin(), [](unsigned char ch) { return std::tolower(ch); });
        add(label, to_string(r.*member), source(v));
        if (v.finite() && std::isfinite(v.value)) add(label + "_value", num(v.value), source(v));
    }
    add("grey", to_string(r.grey), "condition");
    add("dynkin", r.dynkin ? to_string(*r.dynkin) : "vacuous", "condition");
    add("infinity_attracting", to_string(r.infinity_attracting), "derived");
    add("zero_attracting", to_string(r.zero_attracting), "derived");
    add("non_explosion_certified", to_string(r.non_explosion_certified), "derived");
    add("extinction_possible", to_string(r.extinction_possible), "derived");
    add("extinction_caveat", r.extinction_caveat ? "true" : "false", "derived");
    add("stationary", to_string(r.stationary), "derived");
    if (r.stationary == Stationary::Limit) add("first_moment", to_string(r.first_moment), "derived");
    return c;
}

void classify_series(const std::string& pre, const CbcModel& model, const Classified& c, const json& cmd,
                     const Output& out) {
    double lo = model.x0 * 1e-3, hi = model.x0 * 1e3, lap_hi = 10.0;
    int points = 121;
    if (cmd.contains("series")) {
        const std::string p = cmd_path("series");
        const json& s = cmd.at("series");
        if (!s.is_object()) throw ConfigError(p, "expected an object");
        allow_keys(s, {"x_min", "x_max", "points", "laplace_max"}, p);
        lo = get_number(s, "x_min", p, lo);
        hi = get_number(s, "x_max", p, hi);
        points = static_cast<int>(get_number(s, "points", p, points));
        lap_hi = get_number(s, "laplace_max", p, lap_hi);
        if (!(lo > 0.0 && hi > lo)) throw ConfigError(p, "need 0 < x_min < x_max");
        if (points < 2 || points > 100000) throw ConfigError(p + ".points", "expected 2..100000");
        if (!(lap_hi > 0.0)) throw ConfigError(p + ".laplace_max", "must be > 0");
    }
    const auto xs = log_grid(lo, hi, points);
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = c.ss->log_scale_density(xs[i]);
    out.series(pre + "log_scale_density", xs, ys);
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = c.ss->log_speed_density(xs[i]);
    out.series(pre + "log_speed_density", xs, ys);
    if (c.report.stationary == Stationary::Limit) {
        const StationaryLaw law(c.ss);
        std::vector<double> lx(points), ly(points);
        for (int i = 0; i < points; ++i) {
            lx[i] = lap_hi * i / (points - 1);
            ly[i] = law.laplace(lx[i]);
        }
        out.series(pre + "stationary_laplace", lx, ly);
    }
}

int cmd_classify(const RunConfig& rc, Output& out, std::ostream& log) {
    const json& cmd = rc.command;
    allow_keys(cmd, {"series", "check", "expect"}, kCmd);
    const std::string check = get_string(cmd, "check", kCmd, std::string("none"));
    if (check != "none" && check != "feller_grey") throw ConfigError(cmd_path("check"), "must be \"none\" or \"feller_grey\"");
    // expect: {model name: {field: value}}, compared against classify.csv values.
    const json expect = cmd.contains("expect") ? cmd.at("expect") : json::object();
    if (!expect.is_object()) throw ConfigError(cmd_path("expect"), "expected an object {model: {field: value}}");
    for (auto it = expect.begin(); it != expect.end(); ++it) {
        const std::string p = cmd_path("expect") + "." + it.key();
        if (std::none_of(rc.models.begin(), rc.models.end(), [&](const NamedModel& m) { return m.name == it.key(); }))
            throw ConfigError(p, "no model with this name");
        if (!it->is_object()) throw ConfigError(p, "expected an object {field: value}");
        for (auto f = it->begin(); f != it->end(); ++f)
            if (!f->is_string()) throw ConfigError(p + "." + f.key(), "expected a string");
    }

    std::vector<Row> rows;
    std::vector<Row> zoo;
    bool blocked = false, mismatch = false, exact_inconclusive = false;
    for (std::size_t i = 0; i < rc.models.size(); ++i) {
        const auto& [name, model] = rc.models[i];
        const Classified c = classify_into(name, model, out, rows, rc.models.size() > 1);
        classify_series(prefix(rc, i), model, c, cmd, out);
        const BoundaryReport& r = c.report;
        blocked = blocked || inconclusive(r.infinity_attracting) || inconclusive(r.zero_attracting) ||
                  r.stationary == Stationary::Inconclusive || r.non_explosion_certified == Decision::Inconclusive;
        if (check == "feller_grey") {
            const bool exact = model.sigma.order().exact && model.psi.order().exact;
            const bool decided = r.feller_i != IntegralStatus::Inconclusive && r.grey != Decision::Inconclusive;
            std::string agree = "skipped";
            if (decided) {
                const bool ok = (r.feller_i == IntegralStatus::Finite) == (r.grey == Decision::Yes);
                agree = ok ? "true" : "false";
                mismatch = mismatch || !ok;
            } else if (exact) {
                exact_inconclusive = true;
            }
            zoo.push_back({name, to_string(r.feller_i), to_string(r.grey), exact ? "true" : "false", agree});
        }
    }
    out.csv("classify.csv", {"model", "field", "value", "provenance"}, rows);
    std::vector<Row> expected;
    std::size_t misses = 0;
    for (auto it = expect.begin(); it != expect.end(); ++it)
        for (auto f = it->begin(); f != it->end(); ++f) {
            const std::string want = f->get<std::string>();
            auto hit = std::find_if(rows.begin(), rows.end(), [&](const Row& r) { return r[0] == it.key() && r[1] == f.key(); });
            if (hit == rows.end())
                throw ConfigError(cmd_path("expect") + "." + it.key() + "." + f.key(), "no such report field");
            const bool ok = (*hit)[2] == want;
            misses += !ok;
            expected.push_back({it.key(), f.key(), want, (*hit)[2], ok ? "true" : "false"});
        }
    if (!expected.empty()) {
        out.csv("expect.csv", {"model", "field", "expected", "actual", "match"}, expected);
        out.note("expectations", std::to_string(expected.size() - misses) + "/" + std::to_string(expected.size()) + " matched");
        log << (misses ? "FAIL" : "PASS") << " classify: " << expected.size() - misses << "/" << expected.size()
            << " expected values matched\n";
    }
    if (check == "feller_grey") {
        out.csv("zoo.csv", {"model", "feller_i", "grey", "exact_orders", "agree"}, zoo);
        const bool pass = !mismatch && !exact_inconclusive;
        out.note("feller_grey_check", pass ? "PASS" : "FAIL");
        out.write_report();
        log << (pass ? "PASS" : "FAIL") << " feller_i/grey equivalence over " << zoo.size() << " models\n";
        if (mismatch || misses) return kCheckFailed;
        return exact_inconclusive ? kInconclusive : kOk;
    }
    out.write_report();
    if (misses) return kCheckFailed;
    return blocked ? kInconclusive : kOk;
}

// ---- fpt ----

struct Pair {
    double z, a;
};

std::vector<Pair> passage_pairs(const json& cmd, double x0) {
    if (cmd.contains("pairs")) {
        if (cmd.contains("z") || cmd.contains("a")) throw ConfigError(cmd_path("pairs"), "give either pairs or z/a");
        const json& arr = cmd.at("pairs");
        if (!arr.is_array() || arr.empty()) throw ConfigError(cmd_path("pairs"), "expected a non-empty list");
        std::vector<Pair> out;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = cmd_path("pairs") + "[" + std::to_string(i) + "]";
            if (!arr[i].is_object()) throw ConfigError(p, "expected an object {z, a}");
            allow_keys(arr[i], {"z", "a"}, p);
            out.push_back({get_number(arr[i], "z", p), get_number(arr[i], "a", p)});
        }
        return out;
    }
    return {{get_number(cmd, "z", kCmd, x0), get_number(cmd, "a", kCmd)}};
}

// (a/z)^r for Sigma = v^2 x^2/2, Psi = -b x.
double gbm_reference(const CbcModel& m, double theta, double z, double a) {
    const auto& s = m.sigma;
    const auto& p = m.psi;
    if (s.lin() != 0.0 || has_jumps(s.jumps()) || p.quad() != 0.0 || has_jumps(p.jumps()))
        throw ValidationError("reference \"gbm\" needs sigma = quad x^2 and psi = lin x");
    const double a2 = 2.0 * s.quad();
    const double b = -p.lin();
    const double mu = b - a2 / 2.0;
    const double r = (mu + std::sqrt(mu * mu + 2.0 * a2 * theta)) / a2;
    return std::pow(a / z, r);
}

int cmd_fpt(const RunConfig& rc, Output& out, const Flags& flags, std::ostream& log) {
    const json& cmd = rc.command;
    allow_keys(cmd, {"thetas", "z", "a", "pairs", "mc", "reference", "tol", "series"}, kCmd);
    const auto thetas = require_list(cmd, "thetas");
    for (double th : thetas)
        if (!(th >= 0.0)) throw ConfigError(cmd_path("thetas"), "theta must be >= 0");
    const bool mc = flags.mc || get_bool(cmd, "mc", kCmd, false);
    const std::string reference = get_string(cmd, "reference", kCmd, std::string("none"));
    if (reference != "none" && reference != "gbm") throw ConfigError(cmd_path("reference"), "must be \"none\" or \"gbm\"");
    const double tol = get_number(cmd, "tol", kCmd, 1e-4);
    const bool series = get_bool(cmd, "series", kCmd, true);
    if (mc) rc.require_seed();

    std::vector<Row> rows;
    bool failed = false;
    double worst_z = 0.0, worst_rel = 0.0;
    for (std::size_t mi = 0; mi < rc.models.size(); ++mi) {
        const auto& [name, model] = rc.models[mi];
        const auto pairs = passage_pairs(cmd, model.x0);
        const EigenSolver es(model);
        for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
            const auto [z, a] = pairs[pi];
            std::vector<double> analytic;
            for (double th : thetas) analytic.push_back(es.fpt_laplace(th, z, a));
            std::optional<PassageReport> sim;
            if (mc) {
                sim = mc_first_passage(model, Process::Z, z, a, PassageDirection::Down, thetas, rc.mc.n, rc.sim,
                                       mc_run(rc, (mi << 16) + pi));
                out.note(name + ".z" + num(z) + ".a" + num(a) + ".hit_frequency", sim->hit_frequency);
            }
            for (std::size_t k = 0; k < thetas.size(); ++k) {
                Row row{num(thetas[k]), num(analytic[k])};
                if (sim) {
                    const McEstimate& e = sim->estimates[k];
                    const double zs = z_score(e, analytic[k]);
                    worst_z = std::max(worst_z, std::abs(zs));
                    failed = failed || !(std::abs(zs) <= rc.mc.threshold);
                    row.insert(row.end(), {num(e.mean), num(e.se), num(zs)});
                } else {
                    row.insert(row.end(), {"", "", ""});
                }
                row.insert(row.end(), {num(z), num(a), name});
                if (reference == "gbm") {
                    const double ref = gbm_reference(model, thetas[k], z, a);
                    const double rel = std::abs(analytic[k] - ref) / ref;
                    worst_rel = std::max(worst_rel, rel);
                    failed = failed || !(rel <= tol);
                    row.insert(row.end(), {num(ref), num(rel)});
                }
                rows.push_back(std::move(row));
            }
        }
        if (series)
            for (double th : thetas) {
                const auto sol = es.solve(th);
                auto xs = sol->grid();
                auto ys = sol->values();
                const std::size_t stride = std::max<std::size_t>(1, xs.size() / 400);
                std::vector<double> sx, sy;
                for (std::size_t i = 0; i < xs.size(); i += stride) {
                    sx.push_back(xs[i]);
                    sy.push_back(ys[i]);
                }
                out.series(prefix(rc, mi) + "h_theta_" + num(th), sx, sy);
            }
    }
    Row header{"theta", "analytic", "mc_estimate", "mc_stderr", "z_score", "z", "a", "model"};
    if (reference == "gbm") header.insert(header.end(), {"reference", "rel_error"});
    out.csv("fpt.csv", header, rows);
    out.note("rows", num(static_cast<double>(rows.size())));
    if (mc) out.note("max_abs_z", worst_z);
    if (reference == "gbm") out.note("max_rel_error", worst_rel);
    out.note("check", failed ? "FAIL" : "PASS");
    out.write_report();
    if (mc || reference != "none")
        log << (failed ? "FAIL" : "PASS") << " fpt: " << rows.size() << " rows"
            << (mc ? ", max |z| = " + num(worst_z) : "") << (reference != "none" ? ", max rel error = " + num(worst_rel) : "")
            << '\n';
    return failed ? kCheckFailed : kOk;
}

// ---- extinction ----

int cmd_extinction(const RunConfig& rc, Output& out, std::ostream& log) {
    const json& cmd = rc.command;
    allow_keys(cmd, {"thetas", "z", "v_based", "cap_rerun", "control"}, kCmd);
    const auto thetas = require_list(cmd, "thetas");
    const CbcModel& model = rc.model();
    const double z = get_number(cmd, "z", kCmd, model.x0);
    ExtinctionOptions opt;
    opt.v_based = get_bool(cmd, "v_based", kCmd, true);
    opt.cap_rerun = get_bool(cmd, "cap_rerun", kCmd, true);
    std::optional<CbcModel> control;
    std::size_t control_n = 10000;
    std::optional<double> control_horizon;
    if (cmd.contains("control")) {
        const std::string p = cmd_path("control");
        const json& c = cmd.at("control");
        if (!c.is_object()) throw ConfigError(p, "expected an object");
        allow_keys(c, {"psi", "n", "horizon"}, p);
        if (!c.contains("psi")) throw ConfigError(p + ".psi", "missing");
        control = CbcModel(model.sigma, parse_mechanism(c.at("psi"), MechanismKind::Branching, p + ".psi"), model.x0,
                           model.policy);
        const double n = get_number(c, "n", p, 10000.0);
        if (!(n >= 100) || n != std::floor(n)) throw ConfigError(p + ".n", "expected an integer >= 100");
        control_n = static_cast<std::size_t>(n);
        if (c.contains("horizon")) control_horizon = get_number(c, "horizon", p);
    }
    rc.require_seed();

    const ExtinctionReport rep = mc_extinction(model, z, thetas, rc.mc.n, rc.sim, mc_run(rc, 0), opt);
    std::vector<Row> rows;
    bool failed = false;
    const double thr = rc.mc.threshold;
    auto check = [&](double zs) {
        if (!(std::abs(zs) <= thr)) failed = true;
    };
    for (const auto& r : rep.rows) {
        const bool has_a = std::isfinite(r.analytic);
        if (opt.v_based) check(r.z_zv);
        if (has_a) check(r.z_za);
        if (opt.v_based && has_a) check(r.z_va);
        rows.push_back({num(r.theta), opt_num(r.analytic), num(r.z_based.mean), num(r.z_based.se),
                        opt.v_based ? num(r.v_based.mean) : "", opt.v_based ? num(r.v_based.se) : "",
                        opt.v_based && opt.cap_rerun ? num(r.v_based_cap10.mean) : "",
                        opt.v_based && opt.cap_rerun ? num(r.v_based_cap10.se) : "", opt.v_based ? num(r.z_zv) : "",
                        has_a ? num(r.z_za) : "", opt.v_based && has_a ? num(r.z_va) : ""});
    }
    out.csv("extinction.csv",
            {"theta", "analytic", "z_based", "z_based_stderr", "v_based", "v_based_stderr", "v_based_cap10",
             "v_based_cap10_stderr", "z_score_zv", "z_score_za", "z_score_va"},
            rows);
    out.note("z", rep.z0);
    out.note("censor_horizon", rep.censor_horizon);
    out.note("extinction_frequency", rep.extinction_frequency);
    if (opt.v_based) out.note("explosion_frequency", rep.explosion_frequency);
    if (!rep.note.empty()) out.note("note", rep.note);
    out.note("triangulation", failed ? "FAIL" : "PASS");
    log << (failed ? "FAIL" : "PASS") << " extinction triangulation over " << rep.rows.size() << " theta values\n";

    if (control) {
        SimConfig cs = rc.sim;
        cs.horizon = control_horizon.value_or(rep.censor_horizon);
        ExtinctionOptions co{false, false, false};
        const ExtinctionReport cr = mc_extinction(*control, z, {1.0}, control_n, cs, mc_run(rc, 1), co);
        const double hits = std::round(cr.extinction_frequency * static_cast<double>(control_n));
        const bool pass = hits == 0.0;
        failed = failed || !pass;
        out.csv("control.csv", {"psi", "grey", "paths", "horizon", "extinctions", "extinction_frequency", "pass"},
                {{'"' + control->psi.describe() + '"', to_string(grey_condition(control->psi)),
                  num(static_cast<double>(control_n)), num(cs.horizon), num(hits), num(cr.extinction_frequency),
                  pass ? "true" : "false"}});
        out.note("control_extinction_frequency", cr.extinction_frequency);
        out.note("control", pass ? "PASS" : "FAIL");
        log << (pass ? "PASS" : "FAIL") << " control: " << num(hits) << " extinctions over " << control_n << " paths\n";
    }
    out.write_report();
    return failed ? kCheckFailed : kOk;
}

// ---- stationary ----

int cmd_stationary(const RunConfig& rc, Output& out, std::ostream& log) {
    const json& cmd = rc.command;
    allow_keys(cmd, {"xs", "mc", "mc_xs", "mc_models", "t_long", "burn_in", "samples", "expected"}, kCmd);
    const auto xs = require_list(cmd, "xs", std::vector<double>{0.25, 0.5, 1.0, 2.0, 4.0});
    for (double x : xs)
        if (!(x >= 0.0)) throw ConfigError(cmd_path("xs"), "x must be >= 0");
    const bool mc = get_bool(cmd, "mc", kCmd, false);
    const auto mc_xs = get_numbers(cmd, "mc_xs", kCmd, xs);
    const double t_long = get_number(cmd, "t_long", kCmd, 50.0);
    const double burn_in = get_number(cmd, "burn_in", kCmd, t_long);
    const double samples = get_number(cmd, "samples", kCmd, 1.0);
    if (!(samples >= 1) || samples != std::floor(samples)) throw ConfigError(cmd_path("samples"), "expected an integer >= 1");
    auto has_model = [&](const std::string& n) {
        return std::any_of(rc.models.begin(), rc.models.end(), [&](const NamedModel& m) { return m.name == n; });
    };
    std::vector<std::string> mc_models;
    if (cmd.contains("mc_models")) {
        const json& arr = cmd.at("mc_models");
        if (!arr.is_array()) throw ConfigError(cmd_path("mc_models"), "expected a list of model names");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = cmd_path("mc_models") + "[" + std::to_string(i) + "]";
            if (!arr[i].is_string() || !has_model(arr[i].get<std::string>())) throw ConfigError(p, "not a model name");
            mc_models.push_back(arr[i].get<std::string>());
        }
    } else {
        for (const auto& m : rc.models) mc_models.push_back(m.name);
    }
    struct Expect {
        double value, tol;
    };
    std::map<std::pair<std::string, double>, Expect> expected;
    if (cmd.contains("expected")) {
        const json& arr = cmd.at("expected");
        if (!arr.is_array()) throw ConfigError(cmd_path("expected"), "expected a list of {model, x, value, tol}");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = cmd_path("expected") + "[" + std::to_string(i) + "]";
            if (!arr[i].is_object()) throw ConfigError(p, "expected an object {model, x, value, tol}");
            allow_keys(arr[i], {"model", "x", "value", "tol"}, p);
            const std::string name = get_string(arr[i], "model", p, rc.models.front().name);
            if (!has_model(name)) throw ConfigError(p + ".model", "no model with this name");
            const double x = get_number(arr[i], "x", p);
            if (std::find(xs.begin(), xs.end(), x) == xs.end()) throw ConfigError(p + ".x", "not in command.xs");
            expected[{name, x}] = {get_number(arr[i], "value", p), get_number(arr[i], "tol", p, 1e-6)};
        }
    }
    if (mc) rc.require_seed();

    std::vector<Row> rows;
    bool failed = false, blocked = false;
    double worst_z = 0.0;
    for (std::size_t mi = 0; mi < rc.models.size(); ++mi) {
        const auto& [name, model] = rc.models[mi];
        const std::string key = rc.models.size() > 1 ? name + "." : "";
        const auto ss = std::make_shared<const ScaleSpeed>(model);
        const StationaryVerdict verdict = stationary_verdict(ss);
        out.note(key + "stationary", to_string(verdict.kind));
        if (verdict.kind == Stationary::Inconclusive) {
            blocked = true;
            log << name << ": stationary verdict is Inconclusive; no limit law evaluated\n";
            continue;
        }
        if (verdict.kind != Stationary::Limit || !verdict.law)
            throw ConfigError(rc.models.size() > 1 ? "models[" + std::to_string(mi) + "]" : "model",
                              std::string("stationary verdict is ") + to_string(verdict.kind) + "; there is no limit law");
        const StationaryLaw& law = *verdict.law;
        out.note(key + "mean", law.mean());

        std::optional<EmpiricalLaplace> emp;
        if (mc && std::find(mc_models.begin(), mc_models.end(), name) != mc_models.end())
            emp = mc_stationary(model, t_long, burn_in, rc.mc.n, rc.sim, mc_run(rc, mi),
                                static_cast<std::size_t>(samples));
        for (double x : xs) {
            const double a = law.laplace(x);
            Row row{name, num(x), num(a)};
            if (emp && std::find(mc_xs.begin(), mc_xs.end(), x) != mc_xs.end()) {
                const McEstimate e = emp->at(x);
                const double zs = z_score(e, a);
                worst_z = std::max(worst_z, std::abs(zs));
                failed = failed || !(std::abs(zs) <= rc.mc.threshold);
                row.insert(row.end(), {num(e.mean), num(e.se), num(zs)});
            } else {
                row.insert(row.end(), {"", "", ""});
            }
            if (auto it = expected.find({name, x}); it != expected.end()) {
                const double rel = std::abs(a - it->second.value) / std::abs(it->second.value);
                const bool ok = rel <= it->second.tol;
                failed = failed || !ok;
                row.insert(row.end(), {num(it->second.value), num(rel), ok ? "true" : "false"});
            } else {
                row.insert(row.end(), {"", "", ""});
            }
            rows.push_back(std::move(row));
        }
    }
    out.csv("stationary.csv",
            {"model", "x", "analytic", "mc_estimate", "mc_stderr", "z_score", "expected", "rel_error", "within_tol"},
            rows);
    if (mc) {
        out.note("t_long", t_long);
        out.note("paths", num(static_cast<double>(rc.mc.n)));
        out.note("max_abs_z", worst_z);
    }
    out.note("check", failed ? "FAIL" : "PASS");
    out.write_report();
    log << (failed ? "FAIL" : "PASS") << " stationary: " << rows.size() << " points"
        << (mc ? ", max |z| = " + num(worst_z) : "") << '\n';
    if (failed) return kCheckFailed;
    return blocked ? kInconclusive : kOk;
}

// ---- simulate ----

Process parse_process(const std::string& s, const std::string& path) {
    if (s == "Z") return Process::Z;
    if (s == "Y") return Process::Y;
    if (s == "U") return Process::U;
    if (s == "V") return Process::V;
    throw ConfigError(path, "must be one of Z, Y, U, V");
}

int cmd_simulate(const RunConfig& rc, Output& out, std::ostream& log) {
    const json& cmd = rc.command;
    allow_keys(cmd, {"process", "start", "paths", "dump", "floor"}, kCmd);
    const CbcModel& model = rc.model();
    const Process process = parse_process(get_string(cmd, "process", kCmd, std::string("Z")), cmd_path("process"));
    const double start = get_number(cmd, "start", kCmd, model.x0);
    const double paths_d = get_number(cmd, "paths", kCmd, static_cast<double>(rc.mc.n));
    if (!(paths_d >= 1) || paths_d != std::floor(paths_d)) throw ConfigError(cmd_path("paths"), "expected an integer >= 1");
    const auto n = static_cast<std::size_t>(paths_d);
    const double dump_d = get_number(cmd, "dump", kCmd, 10.0);
    if (!(dump_d >= 0) || dump_d != std::floor(dump_d)) throw ConfigError(cmd_path("dump"), "expected an integer >= 0");
    const auto dump = std::min(n, static_cast<std::size_t>(dump_d));
    std::optional<std::pair<double, double>> floor;
    if (cmd.contains("floor")) {
        const std::string p = cmd_path("floor");
        const json& f = cmd.at("floor");
        if (!f.is_object()) throw ConfigError(p, "expected an object {level, tol}");
        allow_keys(f, {"level", "tol"}, p);
        floor.emplace(get_number(f, "level", p, start), get_number(f, "tol", p, 1e-6));
    }
    const McRun run = mc_run(rc, 0);

    SimConfig plain = rc.sim;
    plain.record = false;
    SimConfig recorded = plain;
    recorded.record = true;
    std::vector<PathSample> kept(dump);
    std::vector<double> lo(n), hi(n), term(n);
    std::vector<char> ext(n), expl(n);
    std::vector<std::string> warn(n);
    parallel_for(n, run.workers, [&](std::size_t i) {
        PathRng rng = path_rng(run.seed, run.stream, i);
        PathSample s = simulate(process, model, start, i < dump ? recorded : plain, rng);
        lo[i] = s.min_state;
        hi[i] = s.max_state;
        term[i] = s.terminal_state;
        ext[i] = s.events.extinction_time.has_value();
        expl[i] = s.events.explosion_time.has_value();
        warn[i] = s.warning;
        if (i < dump) kept[i] = std::move(s);
    });

    std::vector<Row> rows;
    for (std::size_t i = 0; i < dump; ++i) {
        const PathSample& s = kept[i];
        const std::string end = s.events.explosion_time ? "explosion" : s.events.extinction_time ? "extinction" : "horizon";
        for (std::size_t k = 0; k < s.times.size(); ++k) {
            const char* ev = k == 0 ? "start" : k + 1 == s.times.size() ? end.c_str() : "";
            rows.push_back({std::to_string(i), num(s.times[k]), num(s.states[k]), ev});
        }
    }
    out.csv("paths.csv", {"path_id", "t", "state", "event"}, rows);

    std::size_t n_ext = 0, n_expl = 0, n_warn = 0;
    std::vector<double> finite_term;
    for (std::size_t i = 0; i < n; ++i) {
        n_ext += ext[i] != 0;
        n_expl += expl[i] != 0;
        n_warn += !warn[i].empty();
        if (std::isfinite(term[i])) finite_term.push_back(term[i]);
    }
    const double min_state = *std::min_element(lo.begin(), lo.end());
    const double max_state = *std::max_element(hi.begin(), hi.end());
    std::vector<Row> summary{
        {"process", to_string(process)},
        {"paths", num(static_cast<double>(n))},
        {"start", num(start)},
        {"horizon", num(rc.sim.horizon)},
        {"z_star", num(z_star(model))},
        {"min_state", num(min_state)},
        {"max_state", num(max_state)},
        {"extinction_frequency", num(static_cast<double>(n_ext) / n)},
        {"explosion_frequency", num(static_cast<double>(n_expl) / n)},
        {"warnings", num(static_cast<double>(n_warn))},
    };
    if (!finite_term.empty() && finite_term.size() >= 2) {
        const McEstimate m = summarize(finite_term, run);
        summary.push_back({"mean_terminal_state", num(m.mean)});
        summary.push_back({"mean_terminal_state_stderr", num(m.se)});
    }
    bool failed = false;
    if (floor) {
        const double bound = floor->first - floor->second;
        failed = !(min_state >= bound);
        summary.push_back({"floor_bound", num(bound)});
        summary.push_back({"floor", failed ? "FAIL" : "PASS"});
        log << (failed ? "FAIL" : "PASS") << " floor: min state " << num(min_state) << " against " << num(bound) << " over "
            << n << " paths\n";
    }
    out.csv("summary.csv", {"field", "value"}, summary);
    for (const auto& r : summary) out.note(r[0], r[1]);
    out.write_report();
    return failed ? kCheckFailed : kOk;
}

// ---- duality ----

void duality_rows(const std::vector<DualityPoint>& pts, const char* kind, std::vector<Row>& rows) {
    for (const auto& p : pts)
        rows.push_back({num(p.t), num(p.x), num(p.other), num(p.lhs.mean), num(p.rhs.mean), num(p.lhs.se),
                        num(p.rhs.se), num(p.z_score), kind});
}

int cmd_duality(const RunConfig& rc, Output& out, std::ostream& log) {
    const json& cmd = rc.command;
    allow_keys(cmd, {"kind", "t", "x", "other", "composed", "allow_uncertified", "threshold", "z0"}, kCmd);
    const std::string kind = get_string(cmd, "kind", kCmd);
    const CbcModel& model = rc.model();
    const auto ts = require_list(cmd, "t");
    const auto xs = require_list(cmd, "x");
    std::vector<Row> rows;
    double max_z = 0.0, threshold = 0.0;
    std::size_t count = 0;
    if (kind == "laplace" || kind == "siegmund") {
        const auto others = require_list(cmd, "other");
        threshold = get_number(cmd, "threshold", kCmd, 4.0);
        const DualityGrid grid{ts, xs, others};
        rc.require_seed();
        DualityReport rep;
        if (kind == "laplace") {
            rep = check_laplace_duality(model, grid, rc.mc.n, rc.sim, mc_run(rc, 0),
                                        get_bool(cmd, "allow_uncertified", kCmd, false));
        } else {
            rep = check_siegmund_duality(model, grid, rc.mc.n, rc.sim, mc_run(rc, 0), get_bool(cmd, "composed", kCmd, true));
        }
        duality_rows(rep.points, "point", rows);
        duality_rows(rep.composed, "composed", rows);
        max_z = rep.max_abs_z;
        count = rep.points.size() + rep.composed.size();
    } else if (kind == "time_change") {
        threshold = get_number(cmd, "threshold", kCmd, rc.mc.threshold);
        const double z0 = get_number(cmd, "z0", kCmd, model.x0);
        rc.require_seed();
        SimConfig direct = rc.sim, tc = rc.sim;
        direct.scheme = Scheme::Direct;
        tc.scheme = Scheme::TimeChange;
        const auto a = mc_laplace_grid(model, Process::Z, z0, xs, ts, rc.mc.n, direct, mc_run(rc, 1));
        const auto b = mc_laplace_grid(model, Process::Z, z0, xs, ts, rc.mc.n, tc, mc_run(rc, 2));
        std::vector<DualityPoint> pts;
        for (std::size_t i = 0; i < ts.size(); ++i)
            for (std::size_t j = 0; j < xs.size(); ++j) {
                DualityPoint p{ts[i], xs[j], z0, a[i][j], b[i][j], z_score(a[i][j], b[i][j])};
                max_z = std::max(max_z, std::abs(p.z_score));
                pts.push_back(p);
            }
        duality_rows(pts, "point", rows);
        count = pts.size();
    } else {
        throw ConfigError(cmd_path("kind"), "must be \"laplace\", \"siegmund\" or \"time_change\"");
    }
    const bool pass = max_z <= threshold;
    out.csv("duality.csv", {"t", "x", "other", "lhs", "rhs", "stderr_lhs", "stderr_rhs", "z_score", "row"}, rows);
    const std::string line = std::string(pass ? "PASS" : "FAIL") + " " + kind + " duality: max |z| = " + num(max_z) +
                             " over " + std::to_string(count) + " points (threshold " + num(threshold) + ")";
    out.note("kind", kind);
    out.note("max_abs_z", max_z);
    out.note("threshold", threshold);
    out.note("result", line);
    out.write_report();
    log << line << '\n';
    return pass ? kOk : kCheckFailed;
}

// ---- report ----

int cmd_report(const RunConfig& rc, Output& out, std::ostream& log) {
    const json& cmd = rc.command;
    allow_keys(cmd, {"thetas", "z", "a", "series"}, kCmd);
    const auto thetas = require_list(cmd, "thetas", std::vector<double>{1.0});
    std::vector<Row> rows, analytic;
    bool blocked = false;
    for (std::size_t i = 0; i < rc.models.size(); ++i) {
        const auto& [name, model] = rc.models[i];
        const Classified c = classify_into(name, model, out, rows, rc.models.size() > 1);
        classify_series(prefix(rc, i), model, c, cmd, out);
        const double z = get_number(cmd, "z", kCmd, model.x0);
        const bool has_a = cmd.contains("a");
        const double a = has_a ? get_number(cmd, "a", kCmd) : 0.0;
        auto add = [&](const std::string& q, double th, double v) {
            analytic.push_back({name, q, num(th), num(z), has_a ? num(a) : "", num(v)});
        };
        try {
            const EigenSolver es(c.ss);
            for (double th : thetas) {
                add("f_theta", th, es.f_theta(th, z));
                if (has_a) add("fpt_laplace", th, es.fpt_laplace(th, z, a));
                if (c.report.extinction_possible == Decision::Yes) add("extinction_laplace", th, es.extinction_laplace(th, z));
            }
        } catch (const InconclusiveError& e) {
            blocked = true;
            out.note(name + ".eigen", std::string("Inconclusive: ") + e.what());
        } catch (const NumericalError& e) {
            blocked = true;
            out.note(name + ".eigen", std::string("numerical failure: ") + e.what());
        }
        if (c.report.stationary == Stationary::Limit) add("stationary_mean", kNaN, StationaryLaw(c.ss).mean());
        const BoundaryReport& r = c.report;
        blocked = blocked || inconclusive(r.infinity_attracting) || inconclusive(r.zero_attracting) ||
                  r.stationary == Stationary::Inconclusive;
    }
    out.csv("classify.csv", {"model", "field", "value", "provenance"}, rows);
    out.csv("analytic.csv", {"model", "quantity", "theta", "z", "a", "value"}, analytic);
    out.write_report();
    log << "report: " << rc.models.size() << " model(s), " << analytic.size() << " analytic values\n";
    return blocked ? kInconclusive : kOk;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"classify", "fpt",    "extinction", "stationary",
                                                "simulate", "duality", "report",    "analyze"};
    return names;
}

int run_command(const std::string& command, const RunConfig& rc, const std::filesystem::path& dir, const Flags& flags,
                std::ostream& log) {
    if (flags.mc && command != "fpt") throw ConfigError("--mc", "only applies to fpt");
    static const char* stochastic[] = {"extinction", "simulate", "duality"};
    for (const char* s : stochastic)
        if (command == s) rc.require_seed();
    const bool seeded = rc.mc.seed.has_value();
    Output out(dir, rc, seeded ? rc.mc.seed : std::nullopt);
    if (command == "classify") return cmd_classify(rc, out, log);
    if (command == "fpt") return cmd_fpt(rc, out, flags, log);
    if (command == "extinction") return cmd_extinction(rc, out, log);
    if (command == "stationary") return cmd_stationary(rc, out, log);
    if (command == "simulate") return cmd_simulate(rc, out, log);
    if (command == "duality") return cmd_duality(rc, out, log);
    if (command == "report" || command == "analyze") return cmd_report(rc, out, log);
    throw ConfigError("command", "unknown command \"" + command + "\"");
}

}  // namespace cbc::cli
