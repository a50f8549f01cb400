#include "lsgrf/validate.hpp"

#include "lsgrf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace lsgrf {

bool ValidationReport::passed() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.passed; });
}

const ConditionResult& ValidationReport::condition(const std::string& name) const {
    for (const auto& c : conditions) {
        if (c.name == name) return c;
    }
    throw DomainError("no condition named " + name);
}

namespace {

std::vector<std::vector<double>> lattice(const FieldSpec& spec, std::size_t per_axis) {
    std::vector<std::vector<double>> axes(spec.k);
    for (auto& ax : axes) {
        for (std::size_t j = 0; j < per_axis; ++j) {
            ax.push_back(spec.lower + spec.T * static_cast<double>(j) / static_cast<double>(per_axis - 1));
        }
    }
    return axes;
}

template <class Fn>
void for_each_point(const std::vector<std::vector<double>>& axes, Fn&& fn) {
    const std::size_t k = axes.size();
    std::vector<std::size_t> idx(k, 0);
    std::vector<double> p(k);
    while (true) {
        for (std::size_t a = 0; a < k; ++a) p[a] = axes[a][idx[a]];
        fn(p);
        std::size_t a = k;
        while (a-- > 0) {
            if (++idx[a] < axes[a].size()) break;
            idx[a] = 0;
        }
        if (a == static_cast<std::size_t>(-1)) return;
    }
}

std::size_t per_axis_count(std::size_t k, double budget, std::size_t cap) {
    const auto n = static_cast<std::size_t>(std::floor(std::pow(budget, 1.0 / static_cast<double>(k))));
    return std::clamp<std::size_t>(n, 2, cap);
}

ConditionResult check_d1(const FieldSpec& spec, const Kernel& kernel, const std::vector<std::vector<double>>& probes) {
    ConditionResult c{"D1", true, "", nlohmann::json::object()};
    double worst = 0.0;
    for (const auto& p : probes) worst = std::max(worst, std::abs(kernel(p, p) - 1.0));
    auto axes = lattice(spec, per_axis_count(spec.k, 200.0, 21));
    for_each_point(axes, [&](const std::vector<double>& p) { worst = std::max(worst, std::abs(kernel(p, p) - 1.0)); });
    c.passed = worst <= 1e-12;
    c.diagnostics["max_variance_error"] = worst;
    c.diagnostics["mean"] = "zero by construction";
    c.message = c.passed ? "unit variance" : "variance deviates from 1";
    return c;
}

ConditionResult check_d2(const FieldSpec& spec) {
    ConditionResult c{"D2", true, "", nlohmann::json::array()};
    for (std::size_t i = 0; i < spec.k; ++i) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        constexpr std::size_t n = 2001;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = spec.profiles[i](spec.lower + spec.T * static_cast<double>(j) / (n - 1));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const bool ok = lo > 0.0 && hi <= 2.0;
        c.passed = c.passed && ok;
        c.diagnostics.push_back({{"coordinate", i}, {"kind", to_string(spec.profiles[i].kind())}, {"min", lo}, {"max", hi}});
    }
    c.message = c.passed ? "exponents continuous with values in (0, 2]" : "an exponent leaves (0, 2]";
    return c;
}

ConditionResult check_d3(const FieldSpec& spec) {
    ConditionResult c{"D3", true, "", nlohmann::json::array()};
    auto axes = lattice(spec, per_axis_count(spec.k, 4000.0, 201));
    for (std::size_t i = 0; i < spec.k; ++i) {
        for (std::size_t a = 0; a < spec.k; ++a) {
            for (double b : spec.variance_scales[i].breakpoints(a)) {
                if (b >= spec.lower && b <= spec.upper()) axes[a].push_back(b);
            }
        }
    }
    for (auto& ax : axes) {
        std::sort(ax.begin(), ax.end());
        ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
    }
    for (std::size_t i = 0; i < spec.k; ++i) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        bool finite = true;
        for_each_point(axes, [&](const std::vector<double>& p) {
            const double v = spec.variance_scales[i](p);
            if (!std::isfinite(v)) finite = false;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        });
        const bool ok = finite && lo > 0.0;
        c.passed = c.passed && ok;
        c.diagnostics.push_back(
            {{"coordinate", i}, {"form", spec.variance_scales[i].form_name()}, {"inf", lo}, {"sup", hi}, {"finite", finite}});
    }
    c.message = c.passed ? "variance scales bounded away from 0 and infinity" : "a variance scale is not bounded away from 0";
    return c;
}

ConditionResult check_d4(const FieldSpec& spec, const Kernel& kernel, const std::vector<std::vector<double>>& probes,
                         const D4Options& options) {
    ConditionResult c{"D4", true, "", nlohmann::json::array()};
    std::size_t failed = 0;
    for (const auto& p : probes) {
        const auto rep = verify_d4_expansion(spec, kernel, p, options);
        if (!rep.converged) ++failed;
        c.diagnostics.push_back(to_json(rep));
    }
    c.passed = failed == 0;
    std::ostringstream msg;
    msg << (probes.size() - failed) << " of " << probes.size() << " probe points converge";
    c.message = msg.str();
    return c;
}

ConditionResult check_a1(const FieldSpec& spec) {
    ConditionResult c{"A1", true, "", nlohmann::json::array()};
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < spec.k; ++i) {
        const auto& p = spec.profiles[i];
        nlohmann::json d{{"coordinate", i}, {"kind", to_string(p.kind())}, {"alpha", p.alpha0()}};
        bool ok = true;
        if (i < spec.k1) {
            d["minimizers"] = p.wells();
            if (p.wells().size() != 1) {
                ok = false;
                problems.push_back("coordinate " + std::to_string(i) + " attains its minimum at " +
                                   std::to_string(p.wells().size()) + " points");
            } else if (!(p.M() > 0.0)) {
                ok = false;
                problems.push_back("coordinate " + std::to_string(i) + " is flat (M = 0), so the minimizer is not unique");
            } else if (p.t0() < spec.lower || p.t0() > spec.upper()) {
                ok = false;
                problems.push_back("coordinate " + std::to_string(i) + " minimizer lies outside the domain");
            } else {
                d["interior"] = p.t0() > spec.lower && p.t0() < spec.upper();
            }
        } else if (p.kind() == ProfileKind::Plateau) {
            d["plateau"] = {p.a(), p.b()};
            ok = p.a() > spec.lower && p.b() < spec.upper() && p.a() < p.b();
            if (!ok) problems.push_back("coordinate " + std::to_string(i) + " plateau is not inside the open domain");
        } else if (p.kind() == ProfileKind::Constant) {
            d["plateau"] = "whole domain";
        } else {
            ok = false;
            problems.push_back("coordinate " + std::to_string(i) + " must be constant or plateau");
        }
        d["passed"] = ok;
        c.passed = c.passed && ok;
        c.diagnostics.push_back(d);
    }
    if (problems.empty()) {
        c.message = "minimum structure as required";
    } else {
        for (std::size_t j = 0; j < problems.size(); ++j) c.message += (j ? "; " : "") + problems[j];
    }
    return c;
}

ConditionResult check_a2(const FieldSpec& spec) {
    ConditionResult c{"A2", true, "", nlohmann::json::array()};
    for (std::size_t i = 0; i < spec.k; ++i) {
        const auto& p = spec.profiles[i];
        nlohmann::json d{{"coordinate", i}, {"delta", p.delta_log()}};
        bool ok = true;
        if (i < spec.k1) {
            d["M"] = p.M();
            d["beta"] = p.beta();
            ok = p.M() > 0.0 && p.beta() > 0.0 && p.delta_log() > 1.0;
            d["expansion_remainder"] = 0.0;
        } else if (p.kind() == ProfileKind::Plateau) {
            d["M"] = p.M();
            d["beta"] = p.beta();
            d["M_tilde"] = p.M_tilde();
            d["beta_tilde"] = p.beta_tilde();
            ok = p.M() > 0.0 && p.beta() > 0.0 && p.M_tilde() > 0.0 && p.beta_tilde() > 0.0 && p.delta_log() > 1.0;
            d["expansion_remainder"] = 0.0;
        } else {
            d["note"] = "constant exponent, no expansion needed";
        }
        d["passed"] = ok;
        c.passed = c.passed && ok;
        c.diagnostics.push_back(d);
    }
    c.message = c.passed ? "parametric expansions hold without remainder; delta recorded as metadata"
                         : "expansion constants must be positive with delta > 1";
    return c;
}

ConditionResult check_strict_correlation(const FieldSpec& spec, const Kernel& kernel) {
    ConditionResult c{"strict_correlation", true, "", nlohmann::json::object()};
    const auto axes = lattice(spec, per_axis_count(spec.k, 400.0, 41));
    std::vector<std::vector<double>> pts;
    for_each_point(axes, [&](const std::vector<double>& p) { pts.push_back(p); });
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t b = a + 1; b < pts.size(); ++b) worst = std::max(worst, kernel(pts[a], pts[b]));
    }
    c.diagnostics["points"] = pts.size();
    c.diagnostics["max_correlation"] = worst;
    c.diagnostics["margin"] = 1.0 - worst;
    c.passed = worst < 1.0;
    c.message = c.passed ? "distinct points have correlation below 1" : "distinct points are perfectly correlated";
    return c;
}

ConditionResult skipped(const std::string& name, const std::string& why) {
    return {name, false, "not evaluated: " + why, nlohmann::json::object()};
}

}  // namespace

std::vector<std::vector<double>> probe_points(const FieldSpec& spec) {
    const std::vector<double> fractions{0.25, 0.5, 0.75};
    std::vector<std::vector<double>> axes(spec.k);
    for (auto& ax : axes) {
        for (double f : fractions) ax.push_back(spec.lower + f * spec.T);
    }
    std::vector<std::vector<double>> out;
    if (spec.k <= 3) {
        for_each_point(axes, [&](const std::vector<double>& p) { out.push_back(p); });
    } else {
        for (double f : fractions) out.emplace_back(spec.k, spec.lower + f * spec.T);
    }
    return out;
}

ValidationReport validate_field_spec(const FieldSpec& spec, const D4Options& d4) {
    spec.check_structure();
    ValidationReport report;
    report.spec_name = spec.name;
    report.kernel = to_string(spec.kernel);

    auto d2 = check_d2(spec);
    auto d3 = check_d3(spec);
    std::optional<Kernel> kernel;
    std::string kernel_error;
    if (d3.passed) {
        try {
            kernel = make_kernel(spec);
        } catch (const std::exception& e) {
            kernel_error = e.what();
        }
    } else {
        kernel_error = "variance scales fail D3";
    }
    const auto probes = probe_points(spec);
    if (kernel) {
        report.conditions.push_back(check_d1(spec, *kernel, probes));
    } else {
        report.conditions.push_back(skipped("D1", kernel_error));
    }
    report.conditions.push_back(std::move(d2));
    report.conditions.push_back(std::move(d3));
    if (kernel) {
        report.conditions.push_back(check_d4(spec, *kernel, probes, d4));
    } else {
        report.conditions.push_back(skipped("D4", kernel_error));
    }
    report.conditions.push_back(check_a1(spec));
    report.conditions.push_back(check_a2(spec));
    if (kernel) {
        report.conditions.push_back(check_strict_correlation(spec, *kernel));
    } else {
        report.conditions.push_back(skipped("strict_correlation", kernel_error));
    }
    return report;
}

nlohmann::json to_json(const D4Report& r) {
    return {{"point", r.point},
            {"radii", r.radii},
            {"directions", r.directions},
            {"ratios", r.ratios},
            {"max_error", r.max_error},
            {"converged", r.converged},
            {"message", r.message}};
}

nlohmann::json to_json(const ValidationReport& r) {
    nlohmann::json conds = nlohmann::json::array();
    for (const auto& c : r.conditions) {
        conds.push_back({{"name", c.name}, {"passed", c.passed}, {"message", c.message}, {"diagnostics", c.diagnostics}});
    }
    return {{"spec", r.spec_name}, {"kernel", r.kernel}, {"passed", r.passed()}, {"conditions", conds}};
}

}  // namespace lsgrf
