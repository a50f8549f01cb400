#include "lsgrf/field_spec.hpp"

#include "lsgrf/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lsgrf {

using nlohmann::json;

// --- VarianceScale ---------------------------------------------------------

VarianceScale::VarianceScale(Form form) : form_(std::move(form)) {}

namespace {

double eval_polynomial(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

// Locate x in strictly increasing nodes; returns cell index and weight of the right node.
std::pair<std::size_t, double> locate(const std::vector<double>& nodes, double x) {
    if (nodes.size() == 1 || x <= nodes.front()) return {0, 0.0};
    if (x >= nodes.back()) return {nodes.size() - 2, 1.0};
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    std::size_t j = static_cast<std::size_t>(it - nodes.begin()) - 1;
    double w = (x - nodes[j]) / (nodes[j + 1] - nodes[j]);
    return {j, w};
}

double eval_grid(const VarianceScale::Grid& g, std::span<const double> t) {
    const std::size_t d = g.axes.size();
    std::vector<std::size_t> cell(d);
    std::vector<double> weight(d);
    std::vector<std::size_t> stride(d, 1);
    for (std::size_t a = d; a-- > 1;) stride[a - 1] = stride[a] * g.nodes[a].size();
    for (std::size_t a = 0; a < d; ++a) {
        auto [j, w] = locate(g.nodes[a], t[g.axes[a]]);
        cell[a] = j;
        weight[a] = w;
    }
    double acc = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
        double w = 1.0;
        std::size_t idx = 0;
        bool skip = false;
        for (std::size_t a = 0; a < d; ++a) {
            const bool hi = (corner >> a) & 1U;
            if (g.nodes[a].size() == 1) {
                if (hi) { skip = true; break; }
                continue;
            }
            w *= hi ? weight[a] : 1.0 - weight[a];
            idx += (cell[a] + (hi ? 1 : 0)) * stride[a];
        }
        if (skip || w == 0.0) continue;
        acc += w * g.values[idx];
    }
    return acc;
}

}  // namespace

double VarianceScale::operator()(std::span<const double> t) const {
    return std::visit(
        [&](const auto& f) -> double {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, Constant>) {
                return f.value;
            } else if constexpr (std::is_same_v<F, Polynomial>) {
                double prod = 1.0;
                for (std::size_t j = 0; j < f.coefficients.size(); ++j) {
                    prod *= eval_polynomial(f.coefficients[j], t[j]);
                }
                return prod;
            } else if constexpr (std::is_same_v<F, Grid>) {
                return eval_grid(f, t);
            } else {
                const double x = t[f.coordinate];
                return std::pow(x, -f.profile(x)) / (2.0 * static_cast<double>(f.k));
            }
        },
        form_);
}

bool VarianceScale::depends_only_on(std::size_t axis) const {
    return std::visit(
        [&](const auto& f) -> bool {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, Constant>) {
                return true;
            } else if constexpr (std::is_same_v<F, Polynomial>) {
                for (std::size_t j = 0; j < f.coefficients.size(); ++j) {
                    if (j != axis && f.coefficients[j].size() > 1) return false;
                }
                return true;
            } else if constexpr (std::is_same_v<F, Grid>) {
                for (std::size_t a = 0; a < f.axes.size(); ++a) {
                    if (f.axes[a] != axis && f.nodes[a].size() > 1) return false;
                }
                return true;
            } else {
                return f.coordinate == axis;
            }
        },
        form_);
}

bool VarianceScale::is_constant() const {
    if (std::holds_alternative<Constant>(form_)) return true;
    if (const auto* p = std::get_if<Polynomial>(&form_)) {
        return std::all_of(p->coefficients.begin(), p->coefficients.end(),
                           [](const auto& c) { return c.size() <= 1; });
    }
    return false;
}

std::vector<double> VarianceScale::breakpoints(std::size_t axis) const {
    if (const auto* g = std::get_if<Grid>(&form_)) {
        for (std::size_t a = 0; a < g->axes.size(); ++a) {
            if (g->axes[a] == axis) return g->nodes[a];
        }
    }
    return {};
}

std::string VarianceScale::form_name() const {
    switch (form_.index()) {
        case 0: return "constant";
        case 1: return "polynomial";
        case 2: return "grid";
        default: return "standardized_mfbm";
    }
}

std::string to_string(KernelModel model) {
    switch (model) {
        case KernelModel::TimeChangedMfbm: return "time_changed_mfbm";
        case KernelModel::AggregateMfbm: return "aggregate_mfbm";
        case KernelModel::PoweredExponential: return "powered_exponential";
    }
    return "unknown";
}

// --- FieldSpec structure ----------------------------------------------------

void FieldSpec::check_structure() const {
    if (k == 0) throw SpecError("/k", "must be a positive integer");
    if (k1 > k) throw SpecError("/k1", "must lie in [0, k]");
    if (!(T > 0.0) || !std::isfinite(T)) throw SpecError("/T", "must be positive");
    if (!std::isfinite(lower)) throw SpecError("/lower", "must be finite");
    if (profiles.size() != k) throw SpecError("/profiles", "expected k entries");
    if (variance_scales.size() != k) throw SpecError("/variance_scales", "expected k entries");
    for (std::size_t i = 0; i < k; ++i) {
        const std::string path = "/profiles/" + std::to_string(i);
        const auto& p = profiles[i];
        if (i < k1 && p.kind() != ProfileKind::UniqueMin) {
            throw SpecError(path + "/kind", "the first k1 profiles must be unique_min");
        }
        if (i >= k1 && p.kind() == ProfileKind::UniqueMin) {
            throw SpecError(path + "/kind", "profiles after the first k1 must be constant or plateau");
        }
        if (p.kind() == ProfileKind::Plateau && !(p.a() > lower && p.b() < upper())) {
            throw SpecError(path, "plateau [a, b] must lie inside the open domain");
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        const std::string path = "/variance_scales/" + std::to_string(i);
        const auto& form = variance_scales[i].form();
        if (const auto* poly = std::get_if<VarianceScale::Polynomial>(&form)) {
            if (poly->coefficients.size() != k) throw SpecError(path + "/coefficients", "expected k lists");
        }
        if (const auto* g = std::get_if<VarianceScale::Grid>(&form)) {
            std::size_t count = 1;
            for (std::size_t a = 0; a < g->axes.size(); ++a) {
                if (g->axes[a] >= k) throw SpecError(path + "/axes", "axis index out of range");
                count *= g->nodes[a].size();
            }
            if (count != g->values.size()) throw SpecError(path + "/values", "size does not match the grid");
        }
        if (const auto* m = std::get_if<VarianceScale::StandardizedMfbm>(&form)) {
            if (m->coordinate != i || m->k != k) throw SpecError(path, "standardized_mfbm scale bound to the wrong coordinate");
            if (!(lower > 0.0)) throw SpecError("/lower", "standardized_mfbm scales need a domain away from 0");
        }
    }
    if (kernel == KernelModel::AggregateMfbm) {
        if (!(lower > 0.0)) throw SpecError("/lower", "aggregate_mfbm needs a domain away from 0");
        for (std::size_t i = 0; i < k; ++i) {
            if (!std::holds_alternative<VarianceScale::StandardizedMfbm>(variance_scales[i].form())) {
                throw SpecError("/variance_scales/" + std::to_string(i),
                                "aggregate_mfbm kernel requires standardized_mfbm scales");
            }
        }
    }
    if (kernel == KernelModel::PoweredExponential) {
        for (std::size_t i = 0; i < k; ++i) {
            if (profiles[i].kind() != ProfileKind::Constant) {
                throw SpecError("/profiles/" + std::to_string(i), "powered_exponential needs constant profiles");
            }
            if (!variance_scales[i].is_constant()) {
                throw SpecError("/variance_scales/" + std::to_string(i), "powered_exponential needs constant scales");
            }
        }
    }
    if (kernel == KernelModel::TimeChangedMfbm) {
        for (std::size_t i = 0; i < k; ++i) {
            if (!variance_scales[i].depends_only_on(i)) {
                throw SpecError("/variance_scales/" + std::to_string(i),
                                "time_changed_mfbm needs C_i depending on t_i only");
            }
        }
    }
}

// --- JSON -------------------------------------------------------------------

namespace {

const json& member(const json& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) throw SpecError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SpecError(path + "/" + key, "missing required field");
    return *it;
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw SpecError(path, "expected a number");
    double x = v.get<double>();
    if (!std::isfinite(x)) throw SpecError(path, "expected a finite number");
    return x;
}

double number_at(const json& obj, const std::string& path, const char* key) {
    return number(member(obj, path, key), path + "/" + key);
}

double number_or(const json& obj, const std::string& path, const char* key, double fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : number(*it, path + "/" + key);
}

std::size_t count_at(const json& obj, const std::string& path, const char* key) {
    const auto& v = member(obj, path, key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw SpecError(path + "/" + key, "expected a non-negative integer");
    }
    return v.get<std::size_t>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
    if (!v.is_array()) throw SpecError(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) out.push_back(number(v[j], path + "/" + std::to_string(j)));
    return out;
}

std::vector<double> increasing(const json& v, const std::string& path) {
    auto out = numbers(v, path);
    if (out.empty()) throw SpecError(path, "needs at least one node");
    for (std::size_t j = 1; j < out.size(); ++j) {
        if (!(out[j] > out[j - 1])) throw SpecError(path + "/" + std::to_string(j), "nodes must be strictly increasing");
    }
    return out;
}

AlphaProfile parse_profile(const json& p, const std::string& path) {
    const auto& kind_v = member(p, path, "kind");
    if (!kind_v.is_string()) throw SpecError(path + "/kind", "expected a string");
    const std::string kind = kind_v.get<std::string>();
    try {
        if (kind == "constant") {
            return AlphaProfile::constant(number_at(p, path, "alpha0"));
        }
        if (kind == "unique_min") {
            const double alpha0 = number_at(p, path, "alpha0");
            const auto& t0v = member(p, path, "t0");
            std::vector<double> wells = t0v.is_array() ? numbers(t0v, path + "/t0")
                                                       : std::vector<double>{number(t0v, path + "/t0")};
            return AlphaProfile::multi_well(alpha0, std::move(wells), number_at(p, path, "M"),
                                            number_at(p, path, "beta"), number_or(p, path, "delta_log", 2.0));
        }
        if (kind == "plateau") {
            return AlphaProfile::plateau(number_at(p, path, "alpha0"), number_at(p, path, "a"),
                                         number_at(p, path, "b"), number_at(p, path, "M"),
                                         number_at(p, path, "beta"), number_at(p, path, "M_tilde"),
                                         number_at(p, path, "beta_tilde"),
                                         number_or(p, path, "delta_log", 2.0));
        }
    } catch (const DomainError& e) {
        throw SpecError(path, e.what());
    }
    throw SpecError(path + "/kind", "unknown profile kind '" + kind + "'");
}

VarianceScale parse_scale(const json& s, const std::string& path, std::size_t i, std::size_t k,
                          const AlphaProfile& profile) {
    const auto& form_v = member(s, path, "form");
    if (!form_v.is_string()) throw SpecError(path + "/form", "expected a string");
    const std::string form = form_v.get<std::string>();
    if (form == "constant") return VarianceScale::constant(number_at(s, path, "value"));
    if (form == "polynomial") {
        const auto& c = member(s, path, "coefficients");
        if (!c.is_array()) throw SpecError(path + "/coefficients", "expected an array of arrays");
        VarianceScale::Polynomial poly;
        for (std::size_t j = 0; j < c.size(); ++j) {
            poly.coefficients.push_back(numbers(c[j], path + "/coefficients/" + std::to_string(j)));
        }
        return VarianceScale(poly);
    }
    if (form == "grid") {
        const auto& pts = member(s, path, "points");
        if (!pts.is_array() || pts.empty()) throw SpecError(path + "/points", "expected a non-empty array");
        VarianceScale::Grid g;
        if (!pts[0].is_array()) {
            g.nodes.push_back(increasing(pts, path + "/points"));
        } else {
            for (std::size_t a = 0; a < pts.size(); ++a) {
                g.nodes.push_back(increasing(pts[a], path + "/points/" + std::to_string(a)));
            }
        }
        if (auto it = s.find("axes"); it != s.end()) {
            if (!it->is_array() || it->size() != g.nodes.size()) {
                throw SpecError(path + "/axes", "expected one axis index per node list");
            }
            for (std::size_t a = 0; a < it->size(); ++a) {
                const auto& ax = (*it)[a];
                if (!ax.is_number_integer() || ax.get<long long>() < 0) {
                    throw SpecError(path + "/axes/" + std::to_string(a), "expected a non-negative integer");
                }
                g.axes.push_back(ax.get<std::size_t>());
            }
        } else if (g.nodes.size() == 1) {
            g.axes.push_back(i);
        } else {
            for (std::size_t a = 0; a < g.nodes.size(); ++a) g.axes.push_back(a);
        }
        g.values = numbers(member(s, path, "values"), path + "/values");
        return VarianceScale(g);
    }
    if (form == "standardized_mfbm") return VarianceScale(VarianceScale::StandardizedMfbm{i, k, profile});
    throw SpecError(path + "/form", "unknown variance scale form '" + form + "'");
}

KernelModel parse_kernel(const json& doc) {
    auto it = doc.find("kernel");
    if (it == doc.end()) return KernelModel::TimeChangedMfbm;
    const json* v = &*it;
    if (v->is_object()) v = &member(*v, "/kernel", "type");
    if (!v->is_string()) throw SpecError("/kernel", "expected a kernel name");
    const auto name = v->get<std::string>();
    if (name == "time_changed_mfbm") return KernelModel::TimeChangedMfbm;
    if (name == "aggregate_mfbm") return KernelModel::AggregateMfbm;
    if (name == "powered_exponential") return KernelModel::PoweredExponential;
    throw SpecError("/kernel", "unknown kernel '" + name + "'");
}

}  // namespace

FieldSpec field_spec_from_json(const json& doc) {
    if (!doc.is_object()) throw SpecError("", "expected a JSON object");
    FieldSpec spec;
    if (auto it = doc.find("name"); it != doc.end() && it->is_string()) spec.name = it->get<std::string>();
    spec.k = count_at(doc, "", "k");
    spec.k1 = count_at(doc, "", "k1");
    spec.T = number_at(doc, "", "T");
    spec.lower = number_or(doc, "", "lower", 0.0);
    spec.kernel = parse_kernel(doc);

    const auto& profiles = member(doc, "", "profiles");
    if (!profiles.is_array()) throw SpecError("/profiles", "expected an array");
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        spec.profiles.push_back(parse_profile(profiles[i], "/profiles/" + std::to_string(i)));
    }
    const auto& scales = member(doc, "", "variance_scales");
    if (!scales.is_array()) throw SpecError("/variance_scales", "expected an array");
    if (profiles.size() != scales.size()) throw SpecError("/variance_scales", "expected one entry per profile");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        spec.variance_scales.push_back(
            parse_scale(scales[i], "/variance_scales/" + std::to_string(i), i, spec.k, spec.profiles[i]));
    }
    spec.check_structure();
    return spec;
}

FieldSpec load_field_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("", "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SpecError("", std::string("invalid JSON: ") + e.what());
    }
    return field_spec_from_json(doc);
}

namespace {

json profile_json(const AlphaProfile& p) {
    json j;
    j["kind"] = to_string(p.kind());
    j["alpha0"] = p.alpha0();
    switch (p.kind()) {
        case ProfileKind::Constant:
            break;
        case ProfileKind::UniqueMin:
            if (p.wells().size() == 1) j["t0"] = p.t0(); else j["t0"] = p.wells();
            j["M"] = p.M();
            j["beta"] = p.beta();
            j["delta_log"] = p.delta_log();
            break;
        case ProfileKind::Plateau:
            j["a"] = p.a();
            j["b"] = p.b();
            j["M"] = p.M();
            j["beta"] = p.beta();
            j["M_tilde"] = p.M_tilde();
            j["beta_tilde"] = p.beta_tilde();
            j["delta_log"] = p.delta_log();
            break;
    }
    return j;
}

json scale_json(const VarianceScale& s) {
    json j;
    j["form"] = s.form_name();
    std::visit(
        [&](const auto& f) {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, VarianceScale::Constant>) {
                j["value"] = f.value;
            } else if constexpr (std::is_same_v<F, VarianceScale::Polynomial>) {
                j["coefficients"] = f.coefficients;
            } else if constexpr (std::is_same_v<F, VarianceScale::Grid>) {
                j["axes"] = f.axes;
                j["points"] = f.nodes;
                j["values"] = f.values;
            }
        },
        s.form());
    return j;
}

}  // namespace

json to_json(const FieldSpec& spec) {
    json j;
    if (!spec.name.empty()) j["name"] = spec.name;
    j["k"] = spec.k;
    j["k1"] = spec.k1;
    j["T"] = spec.T;
    j["lower"] = spec.lower;
    j["kernel"] = to_string(spec.kernel);
    j["profiles"] = json::array();
    for (const auto& p : spec.profiles) j["profiles"].push_back(profile_json(p));
    j["variance_scales"] = json::array();
    for (const auto& s : spec.variance_scales) j["variance_scales"].push_back(scale_json(s));
    return j;
}

}  // namespace lsgrf
