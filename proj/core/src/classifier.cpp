#include <cbc/classifier.hpp>

#include <cmath>
#include <limits>

namespace cbc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(IntegralStatus s) { return s == IntegralStatus::Finite; }
bool divergent(IntegralStatus s) { return s == IntegralStatus::Divergent; }
bool unknown(IntegralStatus s) { return s == IntegralStatus::Inconclusive; }

Attraction attraction(IntegralStatus near, IntegralStatus other) {
    // Positive probability iff `near` is finite; almost surely iff additionally `other` diverges.
    if (unknown(near)) return Attraction::Inconclusive;
    if (divergent(near)) return Attraction::No;
    if (unknown(other)) return Attraction::Inconclusive;
    return divergent(other) ? Attraction::AlmostSurely : Attraction::WithPositiveProb;
}

Stationary stationary_kind(IntegralStatus sv0, IntegralStatus svinf, IntegralStatus mv0, IntegralStatus mvinf) {
    if (unknown(sv0) || unknown(svinf)) return Stationary::Inconclusive;
    if (!divergent(sv0) || !divergent(svinf)) return Stationary::NotApplicable;
    if (unknown(mv0) || unknown(mvinf)) return Stationary::Inconclusive;
    if (finite(mv0) && finite(mvinf)) return Stationary::Limit;
    if (finite(mv0)) return Stationary::ToZero;
    if (finite(mvinf)) return Stationary::ToInfinity;
    return Stationary::NoLimit;
}

void check_status(IntegralStatus s, const char* what) {
    if (unknown(s)) throw InconclusiveError(std::string(what) + " verdict is inconclusive");
}

}  // namespace

const char* to_string(Attraction a) {
    switch (a) {
    case Attraction::No: return "No";
    case Attraction::WithPositiveProb: return "WithPositiveProb";
    case Attraction::AlmostSurely: return "AlmostSurely";
    case Attraction::Inconclusive: return "Inconclusive";
    }
    return "?";
}

const char* to_string(Stationary s) {
    switch (s) {
    case Stationary::Limit: return "Limit";
    case Stationary::ToZero: return "ToZero";
    case Stationary::ToInfinity: return "ToInfinity";
    case Stationary::NoLimit: return "NoLimit";
    case Stationary::NotApplicable: return "NotApplicable";
    case Stationary::Inconclusive: return "Inconclusive";
    }
    return "?";
}

namespace {

Decision certify(IntegralStatus sv0, const std::optional<Decision>& dynkin) {
    if (divergent(sv0) || (dynkin && *dynkin == Decision::Yes)) return Decision::Yes;
    if (unknown(sv0) || (dynkin && *dynkin == Decision::Inconclusive)) return Decision::Inconclusive;
    return Decision::No;
}

std::optional<Decision> dynkin_or_vacuous(const Mechanism& psi) {
    try {
        return dynkin_condition(psi);
    } catch (const ValidationError&) {
        return std::nullopt;
    }
}

}  // namespace

Decision non_explosion_certified(const ScaleSpeed& ss) {
    return certify(ss.improper(Improper::SV0).status, dynkin_or_vacuous(ss.model().psi));
}

BoundaryReport classify(const ScaleSpeed& ss) {
    const CbcModel& m = ss.model();
    BoundaryReport r;
    r.z_star = z_star(m);
    r.psi_zero = m.psi.is_zero();
    r.psi_class = r.psi_zero ? PsiClass::SubordinatorCase : psi_class(m.psi);

    r.sv0 = ss.improper(Improper::SV0).status;
    r.svinf = ss.improper(Improper::SVinf).status;
    r.mv0 = ss.improper(Improper::MV0).status;
    r.mvinf = ss.improper(Improper::MVinf).status;
    r.feller_i = ss.improper(Improper::FellerI).status;
    r.psi_sigma0 = ss.improper(Improper::PsiSigma0).status;

    r.infinity_attracting = attraction(r.sv0, r.svinf);
    r.zero_attracting = r.psi_zero ? Attraction::AlmostSurely : attraction(r.svinf, r.sv0);

    r.grey = r.psi_zero ? Decision::No : grey_condition(m.psi);
    r.dynkin = dynkin_or_vacuous(m.psi);
    r.non_explosion_certified = certify(r.sv0, r.dynkin);

    r.extinction_possible = r.grey;
    r.extinction_caveat = r.non_explosion_certified != Decision::Yes;

    r.stationary = stationary_kind(r.sv0, r.svinf, r.mv0, r.mvinf);
    if (r.stationary == Stationary::Limit)
        r.first_moment = unknown(r.psi_sigma0) ? Decision::Inconclusive
                                               : (finite(r.psi_sigma0) ? Decision::Yes : Decision::No);
    else
        r.first_moment = Decision::No;
    return r;
}

BoundaryReport classify(const CbcModel& model) {
    ScaleSpeed ss(model);
    return classify(ss);
}

double attract_prob(const ScaleSpeed& ss, double z, double a) {
    const double zs = z_star(ss.model());
    if (!(a > zs)) throw ValidationError("attract_prob: level must exceed z*");
    if (!(z >= a)) throw ValidationError("attract_prob: need level <= z");
    const IntegralStatus sv0 = ss.improper(Improper::SV0).status;
    check_status(sv0, "S_V(0, x0]");
    if (divergent(sv0) || z == a) return 1.0;
    return std::exp(ss.log_s_z(z) - ss.log_s_z(a));
}

double prob_limit_zero(const ScaleSpeed& ss, double z) {
    if (!(z > 0.0)) throw ValidationError("prob_limit_zero: z must be > 0");
    if (ss.model().psi.is_zero()) return 1.0;
    const IntegralStatus sv0 = ss.improper(Improper::SV0).status;
    const IntegralStatus svinf = ss.improper(Improper::SVinf).status;
    check_status(sv0, "S_V(0, x0]");
    check_status(svinf, "S_V(x0, inf)");
    if (divergent(svinf)) return 0.0;
    if (divergent(sv0)) return 1.0;
    return std::exp(ss.log_s_z(z) - ss.log_s_z(0.0));
}

StationaryLaw::StationaryLaw(std::shared_ptr<const ScaleSpeed> ss) : ss_(std::move(ss)) {
    log_total_ = ss_->log_mv_tail(0.0);
    if (!std::isfinite(log_total_)) throw ValidationError("stationary law: M_V(0, inf) is not finite");
}

double StationaryLaw::laplace(double x) const {
    if (!(x >= 0.0)) throw ValidationError("stationary laplace: x must be >= 0");
    if (x == 0.0) return 1.0;
    return std::exp(ss_->log_mv_tail(x) - log_total_);
}

double StationaryLaw::mean() const {
    // -L'(0+) = m(0+) / M_V(0, inf) with m(0+) = exp(int_0^{x0} -Psi/Sigma).
    const IntegralVerdict& v = ss_->improper(Improper::PsiSigma0);
    check_status(v.status, "int_0^x0 Psi/Sigma");
    if (v.divergent()) return kInf;
    if (std::isnan(v.value)) throw InconclusiveError("stationary mean: int_0^x0 Psi/Sigma not resolved");
    // Psi <= 0 near 0 in the subordinator case, so Q(0+) = +int |Psi|/Sigma.
    return std::exp(v.value - log_total_);
}

StationaryVerdict stationary_verdict(std::shared_ptr<const ScaleSpeed> ss) {
    StationaryVerdict out;
    const IntegralStatus sv0 = ss->improper(Improper::SV0).status;
    const IntegralStatus svinf = ss->improper(Improper::SVinf).status;
    out.hypothesis_holds = divergent(sv0) && divergent(svinf);
    out.kind = stationary_kind(sv0, svinf, ss->improper(Improper::MV0).status, ss->improper(Improper::MVinf).status);
    if (out.kind == Stationary::Limit) out.law.emplace(std::move(ss));
    return out;
}

StationaryVerdict stationary_verdict(const CbcModel& model) {
    return stationary_verdict(std::make_shared<const ScaleSpeed>(model));
}

double stationary_laplace(const CbcModel& model, double x) {
    const StationaryVerdict v = stationary_verdict(model);
    if (v.kind == Stationary::Inconclusive) throw InconclusiveError("stationary verdict is inconclusive");
    if (!v.law) throw ValidationError(std::string("no limit law: stationary verdict is ") + to_string(v.kind));
    return v.law->laplace(x);
}

}  // namespace cbc
