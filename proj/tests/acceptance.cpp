#include "lsgrf/asymptotics.hpp"
#include "lsgrf/covariance.hpp"
#include "lsgrf/field_spec.hpp"
#include "lsgrf/io.hpp"
#include "lsgrf/montecarlo.hpp"
#include "lsgrf/pickands.hpp"
#include "lsgrf/validate.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace lsgrf;

namespace {

const std::string kSpecs = LSGRF_SPEC_DIR;
const std::string kCli = LSGRF_CLI_PATH;

struct Outcome {
    bool passed = false;
    std::string detail;
};

FieldSpec spec_file(const std::string& name) { return load_field_spec(kSpecs + "/" + name); }

fs::path work_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "lsgrf_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int cli(const std::string& args) {
    const std::string cmd = "\"" + kCli + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_file(p)); }

std::string fmt(double x, int digits = 4) {
    std::ostringstream s;
    s << std::setprecision(digits) << x;
    return s.str();
}

double combined(double a, double b) { return std::sqrt(a * a + b * b); }

Outcome pickands_cli(const std::string& name, double alpha, double lo, double hi) {
    const auto dir = work_dir() / name;
    const int code = cli("pickands --alpha " + fmt(alpha) + " --horizon 16 --step 0.01 --reps 100000 --seed 20240601 --out \"" +
                         dir.string() + "\"");
    if (code != 0) return {false, "cli exit code " + std::to_string(code)};
    const auto doc = read_json(dir / "pickands.json");
    const double est = doc.at("estimate").get<double>();
    const double se = doc.at("standard_error").get<double>();
    return {est >= lo && est <= hi,
            "estimate " + fmt(est) + " (se " + fmt(se, 2) + ") in [" + fmt(lo) + ", " + fmt(hi) + "]"};
}

Outcome criterion1() { return pickands_cli("c1", 1.0, 0.93, 1.07); }
Outcome criterion2() { return pickands_cli("c2", 2.0, 0.53, 0.60); }

Outcome criterion3() {
    const double step = 0.01;
    const std::size_t reps = 20000;
    bool ok = true;
    double worst = -std::numeric_limits<double>::infinity();
    std::string worst_case;
    std::uint64_t seed = 300;
    for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
        const auto unit = estimate_pickands_domain({alpha}, Grid::uniform(1, 0.0, 1.0, 100), reps, {seed++, 0});
        for (double R : {2.0, 4.0, 8.0}) {
            const auto n = static_cast<std::size_t>(std::llround(R / step));
            const auto big = estimate_pickands_domain({alpha}, Grid::uniform(1, 0.0, R, n), reps, {seed++, 0});
            const double bound = R * unit.domain_value + 3.0 * combined(big.domain_value_se, R * unit.domain_value_se);
            const double slack = (big.domain_value - bound) / bound;
            if (big.domain_value > bound) ok = false;
            if (slack > worst) {
                worst = slack;
                worst_case = "alpha=" + fmt(alpha) + " R=" + fmt(R) + ": " + fmt(big.domain_value) + " vs bound " + fmt(bound);
            }
        }
    }
    return {ok, "12 cases, tightest " + worst_case};
}

Outcome criterion4() {
    const auto spec = spec_file("stationary.json");
    RatioOptions opt;
    opt.reps = 1000000;
    opt.mc = {404, 0};
    const auto rep = ratio_experiment(spec, {3.0}, {{1.0, 0.0, "closed form"}}, opt);
    const auto& row = rep.rows.at(0);
    const double target = 9.0 * static_cast<double>(mills_survival(3.0L));
    const double mc = row.mc.estimate;
    const bool band = mc >= 0.6 * target && mc <= 1.1 * target;
    const auto se = [&](const McTailEstimate& e) {
        return std::sqrt(e.estimate * (1.0 - e.estimate) / static_cast<double>(e.reps)) / row.asymptotic.probability;
    };
    const double noise = 2.0 * combined(se(row.mc), se(row.mc_refined));
    const bool doubling = std::abs(row.ratio_refined - 1.0) <= std::abs(row.ratio - 1.0) + noise;
    const bool rule = !row.mc.has_flag(kCoarseGrid);
    return {band && doubling && rule, "step " + fmt(row.mc.grid_steps.at(0)) + ", ratio " + fmt(row.ratio) +
                                          " in [0.6, 1.1]; doubled-grid ratio " + fmt(row.ratio_refined) +
                                          " (noise allowance " + fmt(noise, 2) + ")"};
}

Outcome criterion5() {
    const auto spec = spec_file("unique_min.json");
    RatioOptions opt;
    opt.reps = 1000000;
    opt.mc = {505, 0};
    const auto rep = ratio_experiment(spec, {2.5, 3.0}, {{1.0, 0.0, "closed form"}}, opt);
    const auto& a = rep.rows.at(0);
    const auto& b = rep.rows.at(1);
    const auto se = [](const RatioRow& r) {
        return std::sqrt(r.mc.estimate * (1.0 - r.mc.estimate) / static_cast<double>(r.mc.reps)) / r.asymptotic.probability;
    };
    const bool band = b.ratio >= 0.4 && b.ratio <= 1.5;
    const double noise = 3.0 * combined(se(a), se(b));
    const bool non_degrading = b.ratio >= a.ratio - noise;
    return {band && non_degrading, "ratio(3) " + fmt(b.ratio) + " in [0.4, 1.5]; ratio(2.5) " + fmt(a.ratio) +
                                       ", drop allowance 3 SE = " + fmt(noise, 2) + "; doubled-grid ratios " +
                                       fmt(a.ratio_refined) + ", " + fmt(b.ratio_refined)};
}

Outcome criterion6() {
    std::mt19937_64 gen(606);
    std::uniform_real_distribution<double> A(0.3, 1.8), B(0.5, 3.0), M(0.2, 3.0), F(0.05, 0.95), H(0.5, 2.0),
        U(4.0, 25.0);
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        AggregateParams p;
        p.T1 = 0.3 + F(gen);
        p.T2 = p.T1 + 0.5 + 2.0 * F(gen);
        const std::size_t k = 1 + draw % 4;
        std::vector<PickandsValue> h;
        for (std::size_t i = 0; i < k; ++i) {
            p.coordinates.push_back({A(gen), B(gen), M(gen), p.T1 + F(gen) * (p.T2 - p.T1)});
            h.push_back({H(gen), 0.0, "draw"});
        }
        const double u = U(gen);
        const auto agg = aggregate_mfbm_tail(p, h, u);
        const auto thm = tail_asymptotic(induced_aggregate_spec(p), h, u);
        worst = std::max(worst, std::abs(std::expm1(agg.log_probability - thm.log_probability)));
    }
    const auto chi = chi_tail(ChiParams{}, {1.0, 0.0, "closed form"}, 5.0);
    const double chi_err = std::abs(chi.K - std::numbers::sqrt2 / 2.0) / (std::numbers::sqrt2 / 2.0);
    return {worst <= 1e-12 && chi_err <= 1e-12,
            "max relative gap " + fmt(worst, 3) + " over 100 draws; chi constant error " + fmt(chi_err, 3)};
}

Outcome criterion7() {
    const auto profile = AlphaProfile::unique_min(1.0, 1.0, 1.0, 2.0);
    std::vector<double> times;
    for (int j = 0; j <= 100; ++j) times.push_back(0.5 + 1.5 * j / 100.0);
    const auto rep = chi_sup_check(profile, 2, times,
                                   {circle_directions(8), circle_directions(16), circle_directions(32), circle_directions(64)},
                                   5000, 3.0, {707, 0});
    bool shrinking = true;
    std::string gaps;
    for (std::size_t l = 0; l < rep.levels.size(); ++l) {
        if (l > 0 && !(rep.levels[l].mean_gap < rep.levels[l - 1].mean_gap)) shrinking = false;
        gaps += (l ? ", " : "") + fmt(rep.levels[l].mean_gap, 3);
    }
    const bool ok = rep.max_identity_error <= 1e-12 && shrinking && rep.monotonicity_violations == 0 &&
                    rep.sandwich_violations == 0 && rep.norm_hits == rep.exact_hits;
    return {ok, "identity error " + fmt(rep.max_identity_error, 3) + "; mean gaps (8/16/32/64 directions) " + gaps +
                    "; per-path violations " + std::to_string(rep.monotonicity_violations)};
}

Outcome criterion8() {
    bool ok = true;
    double worst = 0.0;
    for (const char* file : {"aggregate_mfbm.json", "stationary.json"}) {
        const auto spec = spec_file(file);
        const auto kern = make_kernel(spec);
        for (const auto& t : probe_points(spec)) {
            const auto r = verify_d4_expansion(spec, kern, t);
            worst = std::max(worst, r.max_error.back());
            if (!r.converged) ok = false;
        }
    }
    const auto stationary = spec_file("stationary.json");
    Kernel bad("corrupted", 1, [](std::span<const double> p, std::span<const double> q) {
        const double s = std::abs(p[0] - q[0]);
        return s == 0.0 ? 1.0 : 1.0 - s * std::abs(std::log(s));
    });
    const std::vector<double> mid{0.5};
    const auto corrupted = verify_d4_expansion(stationary, bad, mid);
    return {ok && !corrupted.converged, "max |ratio - 1| at radius 1e-4 is " + fmt(worst, 3) +
                                            "; corrupted kernel error " + fmt(corrupted.max_error.back(), 3) +
                                            (corrupted.converged ? " (accepted)" : " (rejected)")};
}

Outcome criterion9() {
    const std::string s = kSpecs + "/";
    const std::vector<std::pair<std::string, std::string>> runs{
        {"validate", "validate --spec \"" + s + "aggregate_mfbm.json\""},
        {"pickands", "pickands --alpha 1.5 --horizon 4 --step 0.02 --reps 2000 --seed 9"},
        {"pickands_domain", "pickands --alpha-vector 1,1.5 --domain-upper 2 --domain-points 21 --reps 1000"},
        {"tail", "tail --spec \"" + s + "plateau.json\" --u 3,4 --pickands-reps 500"},
        {"mc", "mc --spec \"" + s + "aggregate_mfbm.json\" --u 2 --reps 3000 --seed 4"},
        {"ratio", "ratio --spec \"" + s + "unique_min.json\" --u 2,2.5 --reps 3000"},
        {"sample", "sample --spec \"" + s + "plateau.json\" --intervals 16 --count 3 --format both --seed 12"}};
    std::size_t identical = 0;
    std::string failures;
    for (const auto& [name, args] : runs) {
        const auto dir = work_dir() / ("c9_" + name);
        const int first = cli(args + " --threads 1 --out \"" + dir.string() + "\"");
        bool same = first == 0;
        for (const char* threads : {"2", "4"}) {
            if (!same) break;
            same = cli("replay --manifest \"" + (dir / "manifest.json").string() + "\" --check --threads " + threads) == 0;
        }
        if (same) {
            ++identical;
        } else {
            failures += " " + name;
        }
    }
    return {identical == runs.size(), std::to_string(identical) + "/" + std::to_string(runs.size()) +
                                          " commands replay byte-identically under --threads 2 and 4" +
                                          (failures.empty() ? "" : "; failed:" + failures)};
}

Outcome criterion10() {
    using big = boost::multiprecision::cpp_bin_float_50;
    double worst = 0.0;
    for (double u : {0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 38.0}) {
        const big ref = boost::math::erfc(big(u) / boost::multiprecision::sqrt(big(2))) / 2;
        const big got = big(mills_survival(static_cast<long double>(u)));
        worst = std::max(worst, static_cast<double>(boost::multiprecision::abs((got - ref) / ref)));
    }
    return {worst < 1e-10, "max relative error " + fmt(worst, 3)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"Pickands H_1 via CLI", criterion1},
        {"Pickands H_2 via CLI", criterion2},
        {"Pickands subadditivity", criterion3},
        {"stationary MC vs 9 Psi(3)", criterion4},
        {"unique-minimum MC/asymptotic ratio", criterion5},
        {"cross-formula identities", criterion6},
        {"chi identity and direction refinement", criterion7},
        {"local expansion check", criterion8},
        {"manifest replay determinism", criterion9},
        {"Mills ratio accuracy", criterion10}};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (o.passed ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << (i + 1) << "  "
                  << criteria[i].first << ": " << o.detail << " [" << std::fixed << std::setprecision(1) << secs
                  << "s]" << std::defaultfloat << std::endl;
        if (!o.passed) ++failed;
    }
    std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
