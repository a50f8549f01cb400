#include "lsgrf/asymptotics.hpp"

#include "lsgrf/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace lsgrf {

// --- Psi ---------------------------------------------------------------------------------

namespace {

constexpr long double kLogSqrt2Pi = 0.918938533204672741780329736405617639861L;

// Mills ratio Psi(u)/phi(u) as the continued fraction 1/(u+ 1/(u+ 2/(u+ ...))),
// evaluated by the modified Lentz method. Used for u > 8 only.
long double mills_ratio_cf(long double u) {
    constexpr long double tiny = 1e-300L;
    long double f = u, c = u, d = 0.0L;
    for (int n = 1; n < 500; ++n) {
        const long double an = n;
        d = u + an * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = u + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0L / d;
        const long double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0L) < 1e-19L) break;
    }
    return 1.0L / f;
}

}  // namespace

long double mills_survival(long double u) {
    if (std::isnan(u)) return u;
    if (u > 8.0L) return std::exp(-0.5L * u * u - kLogSqrt2Pi) * mills_ratio_cf(u);
    if (u < -8.0L) return 1.0L - mills_survival(-u);
    return 0.5L * std::erfc(u / std::numbers::sqrt2_v<long double>);
}

double log_mills_survival(double u) {
    if (u > 8.0) {
        const long double x = u;
        return static_cast<double>(-0.5L * x * x - kLogSqrt2Pi + std::log(mills_ratio_cf(x)));
    }
    return static_cast<double>(std::log(mills_survival(u)));
}

// --- exponents and constants --------------------------------------------------------------

TailExponents compute_exponents(const FieldSpec& spec) {
    TailExponents e;
    for (std::size_t i = 0; i < spec.k; ++i) e.alpha_exp += 2.0 / spec.profiles[i].alpha0();
    for (std::size_t i = 0; i < spec.k1; ++i) e.beta_exp -= 1.0 / spec.profiles[i].beta();
    return e;
}

std::optional<PickandsValue> known_pickands(double alpha) {
    if (alpha == 1.0) return PickandsValue{1.0, 0.0, "closed form"};
    if (alpha == 2.0) return PickandsValue{1.0 / std::sqrt(std::numbers::pi), 0.0, "closed form"};
    return std::nullopt;
}

void PickandsTable::set(double alpha, PickandsValue value) {
    for (auto& [a, v] : entries_) {
        if (std::abs(a - alpha) <= 1e-12) {
            v = std::move(value);
            return;
        }
    }
    entries_.emplace_back(alpha, std::move(value));
}

std::optional<PickandsValue> PickandsTable::find(double alpha) const {
    for (const auto& [a, v] : entries_) {
        if (std::abs(a - alpha) <= 1e-12) return v;
    }
    return std::nullopt;
}

PickandsValue PickandsTable::resolve(double alpha) const {
    if (auto v = find(alpha)) return *v;
    if (auto v = known_pickands(alpha)) return *v;
    std::ostringstream msg;
    msg << "no Pickands constant available for alpha = " << alpha;
    throw DomainError(msg.str());
}

std::vector<PickandsValue> PickandsTable::for_spec(const FieldSpec& spec) const {
    std::vector<PickandsValue> out;
    for (const auto& p : spec.profiles) out.push_back(resolve(p.alpha0()));
    return out;
}

PickandsTable pickands_table_from_json(const nlohmann::json& doc) {
    PickandsTable table;
    auto add_record = [&](const nlohmann::json& rec, const std::string& path) {
        if (!rec.is_object()) throw SpecError(path, "expected an object");
        auto a = rec.find("alpha");
        if (a == rec.end() || !a->is_number()) throw SpecError(path + "/alpha", "expected a number");
        double value = 0.0;
        if (auto v = rec.find("value"); v != rec.end() && v->is_number()) {
            value = v->get<double>();
        } else if (auto e = rec.find("estimate"); e != rec.end() && e->is_number()) {
            value = e->get<double>();
        } else {
            throw SpecError(path + "/value", "expected a number");
        }
        if (!(value > 0.0) || !std::isfinite(value)) throw SpecError(path + "/value", "must be positive and finite");
        double se = 0.0;
        if (auto s = rec.find("standard_error"); s != rec.end() && s->is_number()) se = s->get<double>();
        std::string source = rec.contains("reps") ? "monte carlo" : "user";
        if (auto s = rec.find("source"); s != rec.end() && s->is_string()) source = s->get<std::string>();
        table.set(a->get<double>(), {value, se, source});
    };
    if (doc.is_array()) {
        for (std::size_t i = 0; i < doc.size(); ++i) add_record(doc[i], "/" + std::to_string(i));
    } else if (doc.is_object() && doc.contains("constants")) {
        const auto& list = doc["constants"];
        if (!list.is_array()) throw SpecError("/constants", "expected an array");
        for (std::size_t i = 0; i < list.size(); ++i) add_record(list[i], "/constants/" + std::to_string(i));
    } else {
        add_record(doc, "");
    }
    return table;
}

nlohmann::json to_json(const PickandsTable& table) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [a, v] : table.entries()) {
        list.push_back({{"alpha", a}, {"value", v.value}, {"standard_error", v.standard_error}, {"source", v.source}});
    }
    return {{"constants", list}};
}

namespace {

LedgerEntry entry_from_log(std::string name, double log_value) {
    return {std::move(name), std::exp(log_value), log_value};
}

std::string indexed(const char* name, std::size_t i) { return std::string(name) + "[" + std::to_string(i) + "]"; }

void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError(std::string(what) + " must be positive and finite");
}

// K interval from Pickands standard errors.
void pickands_interval(const std::vector<PickandsValue>& pickands, double K, double& lo, double& hi) {
    constexpr double z = 1.959964;
    double flo = 1.0, fhi = 1.0;
    for (const auto& h : pickands) {
        flo *= std::max(0.0, h.value - z * h.standard_error) / h.value;
        fhi *= (h.value + z * h.standard_error) / h.value;
    }
    lo = K * flo;
    hi = K * fhi;
}

class BoxIntegral {
public:
    BoxIntegral(const FieldSpec& spec, std::vector<std::size_t> axes, std::vector<std::pair<double, double>> bounds,
                std::vector<double> point)
        : spec_(spec), axes_(std::move(axes)), bounds_(std::move(bounds)), x_(std::move(point)) {}

    double run(double& error) {
        const double value = integrate(0, error);
        return value;
    }

    [[nodiscard]] bool inner_converged() const noexcept { return inner_ok_; }

private:
    double integrand() const {
        double log_f = 0.0;
        for (std::size_t i = 0; i < spec_.k; ++i) {
            const double c = spec_.variance_scales[i](x_);
            if (!(c > 0.0)) throw DomainError("variance scale is not positive inside the integration domain");
            log_f += std::log(c) / spec_.profiles[i].alpha0();
        }
        return std::exp(log_f);
    }

    double integrate(std::size_t depth, double& error) {
        if (depth == axes_.size()) {
            error = 0.0;
            return integrand();
        }
        const std::size_t axis = axes_[depth];
        const auto [lo, hi] = bounds_[depth];
        std::vector<double> cuts{lo};
        for (std::size_t i = 0; i < spec_.k; ++i) {
            for (double b : spec_.variance_scales[i].breakpoints(axis)) {
                if (b > lo && b < hi) cuts.push_back(b);
            }
        }
        cuts.push_back(hi);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

        using boost::math::quadrature::gauss_kronrod;
        double total = 0.0;
        error = 0.0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            double err = 0.0;
            auto f = [&](double s) {
                x_[axis] = s;
                double inner_err = 0.0;
                const double v = integrate(depth + 1, inner_err);
                if (inner_err > kIntegralRelativeTolerance * std::abs(v)) inner_ok_ = false;
                return v;
            };
            total += gauss_kronrod<double, 31>::integrate(f, cuts[c], cuts[c + 1], 12, 1e-12, &err);
            error += err;
        }
        return total;
    }

    const FieldSpec& spec_;
    std::vector<std::size_t> axes_;
    std::vector<std::pair<double, double>> bounds_;
    std::vector<double> x_;
    bool inner_ok_ = true;
};

}  // namespace

TailConstant compute_constant(const FieldSpec& spec, const std::vector<PickandsValue>& pickands) {
    spec.check_structure();
    if (pickands.size() != spec.k) throw DomainError("compute_constant: need one Pickands constant per coordinate");
    for (const auto& h : pickands) require_positive(h.value, "Pickands constant");

    TailConstant out;
    std::vector<double> point(spec.k, 0.0);
    std::vector<std::size_t> axes;
    std::vector<std::pair<double, double>> bounds;
    for (std::size_t i = 0; i < spec.k; ++i) {
        const auto& p = spec.profiles[i];
        if (i < spec.k1) {
            if (p.wells().size() != 1) throw DomainError("compute_constant: profile minimum is not unique");
            require_positive(p.M(), "curvature M");
            require_positive(p.beta(), "exponent beta");
            point[i] = p.t0();
            if (p.t0() > spec.lower && p.t0() < spec.upper()) ++out.q;
        } else if (p.kind() == ProfileKind::Plateau) {
            axes.push_back(i);
            bounds.emplace_back(p.a(), p.b());
        } else {
            axes.push_back(i);
            bounds.emplace_back(spec.lower, spec.upper());
        }
    }

    out.ledger.push_back(entry_from_log("2^q", out.q * std::numbers::ln2));
    for (std::size_t i = 0; i < spec.k1; ++i) {
        const auto& p = spec.profiles[i];
        const double a = p.alpha0();
        const double inv_beta = 1.0 / p.beta();
        out.ledger.push_back(entry_from_log(indexed("curvature", i),
                                            inv_beta * (2.0 * std::log(a) - std::numbers::ln2 - std::log(p.M()))));
        out.ledger.push_back(entry_from_log(indexed("gamma", i), std::lgamma(inv_beta + 1.0)));
    }
    for (std::size_t i = 0; i < spec.k; ++i) {
        out.ledger.push_back(entry_from_log(indexed("pickands", i), std::log(pickands[i].value)));
    }

    BoxIntegral box(spec, axes, bounds, point);
    double err = 0.0;
    out.integral = box.run(err);
    out.integral_error = err;
    if (!(out.integral > 0.0) || !std::isfinite(out.integral)) {
        throw IntegrationError("variance-scale integral is not positive", out.integral, err);
    }
    if (err > kIntegralRelativeTolerance * out.integral || !box.inner_converged()) {
        throw IntegrationError("variance-scale integral did not reach relative tolerance 1e-8", out.integral, err);
    }
    out.ledger.push_back({"integral", out.integral, std::log(out.integral)});

    for (const auto& e : out.ledger) out.log_K += e.log_value;
    out.K = std::exp(out.log_K);
    pickands_interval(pickands, out.K, out.K_lower, out.K_upper);
    return out;
}

// --- tail assembly ----------------------------------------------------------------------

bool TailResult::has_flag(const std::string& flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

namespace {

void check_threshold(double u, double beta_exp) {
    if (!std::isfinite(u)) throw DomainError("threshold must be finite");
    if (beta_exp != 0.0 && !(u > 1.0)) throw DomainError("threshold must exceed 1 when the log factor is present");
    if (!(u > 0.0)) throw DomainError("threshold must be positive");
}

TailResult assemble(std::string formula, double alpha_exp, double beta_exp, std::vector<LedgerEntry> constant,
                    double u) {
    check_threshold(u, beta_exp);
    TailResult r;
    r.formula = std::move(formula);
    r.alpha_exp = alpha_exp;
    r.beta_exp = beta_exp;
    r.u = u;
    r.ledger = std::move(constant);
    double log_K = 0.0;
    for (const auto& e : r.ledger) log_K += e.log_value;
    r.K = std::exp(log_K);
    r.ledger.push_back(entry_from_log("u^alpha", alpha_exp * std::log(u)));
    r.ledger.push_back(entry_from_log("(ln u)^beta", beta_exp == 0.0 ? 0.0 : beta_exp * std::log(std::log(u))));
    r.ledger.push_back(entry_from_log("Psi(u)", log_mills_survival(u)));
    for (const auto& e : r.ledger) r.log_probability += e.log_value;
    r.probability = std::exp(r.log_probability);
    if (u <= std::numbers::e || r.probability > kPreAsymptoticLevel) r.flags.emplace_back(kPreAsymptotic);
    if (r.probability > 1.0) r.flags.emplace_back(kExceedsOne);
    return r;
}

}  // namespace

TailResult tail_asymptotic(const FieldSpec& spec, const std::vector<PickandsValue>& pickands, double u) {
    const auto exps = compute_exponents(spec);
    check_threshold(u, exps.beta_exp);
    const auto c = compute_constant(spec, pickands);
    auto r = assemble("general", exps.alpha_exp, exps.beta_exp, c.ledger, u);
    r.q = c.q;
    r.K_lower = c.K_lower;
    r.K_upper = c.K_upper;
    return r;
}

TailResult aggregate_mfbm_tail(const AggregateParams& params, const std::vector<PickandsValue>& pickands, double u) {
    const std::size_t k = params.coordinates.size();
    if (k == 0) throw DomainError("aggregate_mfbm_tail: no coordinates");
    if (pickands.size() != k) throw DomainError("aggregate_mfbm_tail: need one Pickands constant per coordinate");
    if (!(params.T1 > 0.0 && params.T2 > params.T1)) throw DomainError("aggregate_mfbm_tail: need 0 < T1 < T2");
    double sum_inv_alpha = 0.0, sum_inv_beta = 0.0;
    for (const auto& c : params.coordinates) {
        if (!(c.alpha > 0.0 && c.alpha < 2.0)) throw DomainError("aggregate_mfbm_tail: alpha must lie in (0, 2)");
        require_positive(c.beta, "beta");
        require_positive(c.M, "M");
        if (!(c.t0 > params.T1 && c.t0 < params.T2)) throw DomainError("aggregate_mfbm_tail: t0 must be interior");
        sum_inv_alpha += 1.0 / c.alpha;
        sum_inv_beta += 1.0 / c.beta;
    }
    const double kd = static_cast<double>(k);
    std::vector<LedgerEntry> ledger;
    ledger.push_back(entry_from_log("2^k", kd * std::numbers::ln2));
    ledger.push_back(entry_from_log("(2k)^(-sum 1/alpha)", -sum_inv_alpha * std::log(2.0 * kd)));
    for (std::size_t i = 0; i < k; ++i) {
        const auto& c = params.coordinates[i];
        require_positive(pickands[i].value, "Pickands constant");
        ledger.push_back(entry_from_log(indexed("pickands", i), std::log(pickands[i].value)));
        ledger.push_back(entry_from_log(indexed("gamma", i), std::lgamma(1.0 / c.beta + 1.0)));
        ledger.push_back(entry_from_log(indexed("curvature", i),
                                        (2.0 * std::log(c.alpha) - std::log(2.0 * c.M)) / c.beta));
        ledger.push_back(entry_from_log(indexed("1/t0", i), -std::log(c.t0)));
    }
    auto r = assemble("aggregate_mfbm", 2.0 * sum_inv_alpha, -sum_inv_beta, std::move(ledger), u);
    r.q = static_cast<int>(k);
    pickands_interval(pickands, r.K, r.K_lower, r.K_upper);
    return r;
}

FieldSpec induced_aggregate_spec(const AggregateParams& params) {
    FieldSpec spec;
    spec.name = "aggregate mfBm";
    spec.k = params.coordinates.size();
    spec.k1 = spec.k;
    spec.lower = params.T1;
    spec.T = params.T2 - params.T1;
    spec.kernel = KernelModel::AggregateMfbm;
    for (std::size_t i = 0; i < spec.k; ++i) {
        const auto& c = params.coordinates[i];
        auto profile = AlphaProfile::unique_min(c.alpha, c.t0, c.M, c.beta, params.delta_log);
        spec.profiles.push_back(profile);
        spec.variance_scales.emplace_back(VarianceScale::StandardizedMfbm{i, spec.k, profile});
    }
    spec.check_structure();
    return spec;
}

TailResult chi_tail(const ChiParams& p, const PickandsValue& pickands, double u) {
    if (p.k < 1) throw DomainError("chi_tail: k must be at least 1");
    if (!(p.alpha > 0.0 && p.alpha < 2.0)) throw DomainError("chi_tail: alpha must lie in (0, 2)");
    require_positive(p.beta, "beta");
    require_positive(p.M, "M");
    require_positive(pickands.value, "Pickands constant");
    if (!(p.T1 > 0.0 && p.T2 > p.T1)) throw DomainError("chi_tail: need 0 < T1 < T2");
    if (!(p.t0 > p.T1 && p.t0 < p.T2)) throw DomainError("chi_tail: t0 must be interior");
    const double kd = static_cast<double>(p.k);
    const double inv_beta = 1.0 / p.beta;
    std::vector<LedgerEntry> ledger;
    ledger.push_back(
        entry_from_log("2^(5/2-k/2-1/beta-1/alpha)", (2.5 - kd / 2.0 - inv_beta - 1.0 / p.alpha) * std::numbers::ln2));
    ledger.push_back(entry_from_log("pickands", std::log(pickands.value)));
    ledger.push_back(entry_from_log("alpha^(2/beta)", 2.0 * inv_beta * std::log(p.alpha)));
    ledger.push_back(entry_from_log("gamma(1/beta+1)", std::lgamma(inv_beta + 1.0)));
    ledger.push_back(entry_from_log("M^(-1/beta)", -inv_beta * std::log(p.M)));
    ledger.push_back(entry_from_log("1/t0", -std::log(p.t0)));
    ledger.push_back(entry_from_log("1/gamma(k/2)", -std::lgamma(kd / 2.0)));
    auto r = assemble("chi", kd - 1.0 + 2.0 / p.alpha, -inv_beta, std::move(ledger), u);
    pickands_interval({pickands}, r.K, r.K_lower, r.K_upper);
    return r;
}

// --- JSON ---------------------------------------------------------------------------------

namespace {

nlohmann::json ledger_json(const std::vector<LedgerEntry>& ledger) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : ledger) out.push_back({{"name", e.name}, {"value", e.value}, {"log_value", e.log_value}});
    return out;
}

}  // namespace

nlohmann::json to_json(const TailConstant& c) {
    return {{"K", c.K},
            {"log_K", c.log_K},
            {"q", c.q},
            {"integral", c.integral},
            {"integral_error", c.integral_error},
            {"K_interval", {c.K_lower, c.K_upper}},
            {"ledger", ledger_json(c.ledger)}};
}

nlohmann::json to_json(const TailResult& r) {
    return {{"formula", r.formula},
            {"alpha_exp", r.alpha_exp},
            {"beta_exp", r.beta_exp},
            {"K", r.K},
            {"K_interval", {r.K_lower, r.K_upper}},
            {"q", r.q},
            {"u", r.u},
            {"probability", r.probability},
            {"log_probability", r.log_probability},
            {"ledger", ledger_json(r.ledger)},
            {"flags", r.flags}};
}

}  // namespace lsgrf
