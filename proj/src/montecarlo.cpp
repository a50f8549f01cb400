#include "lsgrf/montecarlo.hpp"

#include "lsgrf/covariance.hpp"
#include "lsgrf/error.hpp"
#include "lsgrf/io.hpp"
#include "lsgrf/parallel.hpp"
#include "lsgrf/rng.hpp"
#include "lsgrf/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace lsgrf {

namespace {

constexpr std::uint64_t kSupPurpose = 3;
constexpr std::uint64_t kChiPurpose = 4;
constexpr std::size_t kMaxDenseGrid = 6000;

double max_spacing(const std::vector<double>& nodes) {
    double h = 0.0;
    for (std::size_t j = 1; j < nodes.size(); ++j) h = std::max(h, nodes[j] - nodes[j - 1]);
    return h;
}

}  // namespace

WilsonInterval wilson_interval(std::size_t hits, std::size_t reps, double z) {
    if (reps == 0) return {0.0, 1.0};
    const double n = static_cast<double>(reps);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    // The interval always contains p; rounding can otherwise push an end past it.
    return {std::clamp(std::min(center - half, p), 0.0, 1.0), std::clamp(std::max(center + half, p), 0.0, 1.0)};
}

double resolution_step(double alpha, double u) {
    if (!(alpha > 0.0)) throw DomainError("resolution_step: alpha must be positive");
    return 0.1 * std::pow(std::max(u, 1.0), -2.0 / alpha);
}

Grid tail_grid(const FieldSpec& spec, double u, std::size_t refine) {
    if (refine == 0) throw DomainError("tail_grid: refine must be positive");
    std::vector<std::vector<double>> axes(spec.k);
    for (std::size_t i = 0; i < spec.k; ++i) {
        const double step = resolution_step(spec.profiles[i].alpha0(), u);
        const auto base = static_cast<std::size_t>(std::ceil(spec.T / step - 1e-9));
        const std::size_t n = std::max<std::size_t>(1, base) * refine;
        for (std::size_t j = 0; j <= n; ++j) {
            axes[i].push_back(j == n ? spec.upper() : spec.lower + spec.T * static_cast<double>(j) / static_cast<double>(n));
        }
    }
    return Grid(std::move(axes));
}

SupSamples sample_suprema(const FieldSpec& spec, const Grid& grid, std::size_t reps, const McOptions& options,
                          std::size_t stride) {
    if (grid.dim() != spec.k) throw DomainError("sample_suprema: grid dimension does not match the spec");
    if (stride != 1 && stride != 2) throw DomainError("sample_suprema: stride must be 1 or 2");
    const Kernel kernel = make_kernel(spec);
    SupSamples out;
    out.fine.resize(reps);
    if (stride == 2) out.coarse.resize(reps);

    const std::size_t k = spec.k;
    std::vector<std::unique_ptr<GaussianSampler>> samplers;
    const bool per_axis = kernel.additive() && kernel.components().size() == k;
    if (per_axis) {
        out.sampler = "per-axis cholesky";
        for (std::size_t i = 0; i < k; ++i) {
            std::vector<std::vector<double>> pts;
            for (double x : grid.axis(i)) pts.push_back({x});
            const auto cm = build_cov_matrix(pts, kernel.components()[i], options.threads);
            out.jitter = std::max(out.jitter, cm.jitter);
            samplers.push_back(std::make_unique<GaussianSampler>(cm));
        }
    } else {
        if (grid.size() > kMaxDenseGrid) throw DomainError("sample_suprema: grid too large for dense Cholesky sampling");
        out.sampler = "cholesky";
        const auto cm = build_cov_matrix(grid, kernel, options.threads);
        out.jitter = cm.jitter;
        samplers.push_back(std::make_unique<GaussianSampler>(cm));
    }

    std::vector<std::size_t> coarse_index;
    if (stride == 2 && !per_axis) {
        const auto counts = grid.counts();
        std::vector<std::size_t> node(k, 0);
        for (std::size_t flat = 0; flat < grid.size(); ++flat) {
            std::size_t rem = flat;
            bool even = true;
            for (std::size_t a = k; a-- > 0;) {
                node[a] = rem % counts[a];
                rem /= counts[a];
                even = even && node[a] % 2 == 0;
            }
            if (even) coarse_index.push_back(flat);
        }
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    parallel_for_chunks(chunk_count(reps), options.threads, [&](std::size_t c) {
        std::vector<std::vector<double>> values(samplers.size()), z(samplers.size());
        for (std::size_t s = 0; s < samplers.size(); ++s) {
            values[s].resize(samplers[s]->size());
            z[s].resize(samplers[s]->size());
        }
        const std::size_t begin = c * kReplicationsPerChunk;
        const std::size_t end = std::min(reps, begin + kReplicationsPerChunk);
        for (std::size_t r = begin; r < end; ++r) {
            PhiloxStream rng(options.seed, stream_id(kSupPurpose, r));
            for (std::size_t s = 0; s < samplers.size(); ++s) samplers[s]->sample(rng, values[s], z[s]);
            if (per_axis) {
                double fine = 0.0, coarse = 0.0;
                for (std::size_t s = 0; s < k; ++s) {
                    double mf = -std::numeric_limits<double>::infinity(), mc = mf;
                    for (std::size_t j = 0; j < values[s].size(); ++j) {
                        mf = std::max(mf, values[s][j]);
                        if (j % 2 == 0) mc = std::max(mc, values[s][j]);
                    }
                    fine += mf;
                    coarse += mc;
                }
                out.fine[r] = scale * fine;
                if (stride == 2) out.coarse[r] = scale * coarse;
            } else {
                out.fine[r] = *std::max_element(values[0].begin(), values[0].end());
                if (stride == 2) {
                    double mc = -std::numeric_limits<double>::infinity();
                    for (std::size_t idx : coarse_index) mc = std::max(mc, values[0][idx]);
                    out.coarse[r] = mc;
                }
            }
        }
    });
    return out;
}

bool McTailEstimate::has_flag(const std::string& flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

McTailEstimate tail_from_suprema(const FieldSpec& spec, double u, const Grid& grid, const std::vector<double>& sups,
                                 const McOptions& options, std::optional<double> expected) {
    McTailEstimate est;
    est.spec_name = spec.name;
    est.u = u;
    est.grid_counts = grid.counts();
    est.reps = sups.size();
    est.seed = options.seed;
    for (double s : sups) est.hits += s > u ? 1 : 0;
    est.estimate = est.reps == 0 ? 0.0 : static_cast<double>(est.hits) / static_cast<double>(est.reps);
    const auto ci = wilson_interval(est.hits, est.reps);
    est.ci_lower = ci.lower;
    est.ci_upper = ci.upper;
    bool coarse = false;
    for (std::size_t i = 0; i < grid.dim(); ++i) {
        const double h = max_spacing(grid.axis(i));
        est.grid_steps.push_back(h);
        if (h > resolution_step(spec.profiles[i].alpha0(), u) * (1.0 + 1e-9)) coarse = true;
    }
    if (coarse) est.flags.emplace_back(kCoarseGrid);
    if (expected) {
        est.expected_hits = *expected * static_cast<double>(est.reps);
        if (*est.expected_hits < kMinExpectedHits) est.flags.emplace_back(kUnderpowered);
    }
    return est;
}

McTailEstimate estimate_sup_tail(const FieldSpec& spec, double u, const Grid& grid, std::size_t reps,
                                 const McOptions& options, std::optional<double> expected) {
    if (reps < 100) throw DomainError("estimate_sup_tail: reps must be at least 100");
    if (std::isnan(u)) throw DomainError("estimate_sup_tail: threshold is NaN");
    const auto sups = sample_suprema(spec, grid, reps, options, 1);
    auto est = tail_from_suprema(spec, u, grid, sups.fine, options, expected);
    est.sampler = sups.sampler;
    return est;
}

// --- chi process ---------------------------------------------------------------

std::vector<std::vector<double>> circle_directions(std::size_t n) {
    if (n == 0) throw DomainError("circle_directions: need at least one direction");
    std::vector<std::vector<double>> out;
    for (std::size_t j = 0; j < n; ++j) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        out.push_back({std::cos(a), std::sin(a)});
    }
    return out;
}

namespace {

struct ChiPartial {
    double identity_error = 0.0;
    std::size_t norm_hits = 0;
    std::size_t exact_hits = 0;
    std::vector<CompensatedSum> gap_sum;
    std::vector<double> gap_max;
    std::vector<double> gap_min;
    std::vector<std::size_t> hits;
    std::size_t monotone = 0;
    std::size_t sandwich = 0;

    explicit ChiPartial(std::size_t levels)
        : gap_sum(levels),
          gap_max(levels, -std::numeric_limits<double>::infinity()),
          gap_min(levels, std::numeric_limits<double>::infinity()),
          hits(levels, 0) {}
};

}  // namespace

ChiCheckReport chi_sup_check(const AlphaProfile& profile, std::size_t k, const std::vector<double>& times,
                             const std::vector<std::vector<std::vector<double>>>& direction_levels, std::size_t reps,
                             double u, const McOptions& options) {
    if (k == 0) throw DomainError("chi_sup_check: k must be positive");
    if (times.empty()) throw DomainError("chi_sup_check: empty time grid");
    for (const auto& level : direction_levels) {
        if (level.empty()) throw DomainError("chi_sup_check: empty direction set");
        for (const auto& d : level) {
            if (d.size() != k) throw DomainError("chi_sup_check: direction dimension does not match k");
            require_unit_vector(d);
        }
    }
    std::vector<std::vector<double>> pts;
    for (double t : times) {
        if (!(t > 0.0)) throw DomainError("chi_sup_check: times must be positive");
        pts.push_back({t});
    }
    const GaussianSampler sampler(build_cov_matrix(pts, std_mfbm_kernel(profile), options.threads));
    const std::size_t n = times.size();
    const std::size_t levels = direction_levels.size();

    const std::size_t chunks = chunk_count(reps);
    std::vector<ChiPartial> partial(chunks, ChiPartial(levels));
    parallel_for_chunks(chunks, options.threads, [&](std::size_t c) {
        std::vector<std::vector<double>> b(k, std::vector<double>(n));
        std::vector<double> z(n), gaps(levels);
        auto& acc = partial[c];
        const std::size_t begin = c * kReplicationsPerChunk;
        const std::size_t end = std::min(reps, begin + kReplicationsPerChunk);
        for (std::size_t r = begin; r < end; ++r) {
            PhiloxStream rng(options.seed, stream_id(kChiPurpose, r));
            for (std::size_t i = 0; i < k; ++i) sampler.sample(rng, b[i], z);
            double norm_max = -std::numeric_limits<double>::infinity();
            double exact_max = norm_max;
            for (std::size_t j = 0; j < n; ++j) {
                double sq = 0.0;
                for (std::size_t i = 0; i < k; ++i) sq += b[i][j] * b[i][j];
                const double norm = std::sqrt(sq);
                norm_max = std::max(norm_max, norm);
                if (norm > 0.0) {
                    double y = 0.0;
                    for (std::size_t i = 0; i < k; ++i) y += b[i][j] * (b[i][j] / norm);
                    acc.identity_error = std::max(acc.identity_error, std::abs(y - norm));
                    exact_max = std::max(exact_max, y);
                } else {
                    exact_max = std::max(exact_max, 0.0);
                }
            }
            acc.norm_hits += norm_max > u ? 1 : 0;
            acc.exact_hits += exact_max > u ? 1 : 0;
            for (std::size_t l = 0; l < levels; ++l) {
                double m = -std::numeric_limits<double>::infinity();
                for (const auto& d : direction_levels[l]) {
                    for (std::size_t j = 0; j < n; ++j) {
                        double y = 0.0;
                        for (std::size_t i = 0; i < k; ++i) y += b[i][j] * d[i];
                        m = std::max(m, y);
                    }
                }
                gaps[l] = norm_max - m;
                acc.gap_sum[l].add(gaps[l]);
                acc.gap_max[l] = std::max(acc.gap_max[l], gaps[l]);
                acc.gap_min[l] = std::min(acc.gap_min[l], gaps[l]);
                acc.hits[l] += m > u ? 1 : 0;
                if (gaps[l] < -1e-12) ++acc.sandwich;
            }
            for (std::size_t l = 1; l < levels; ++l) {
                if (gaps[l] > gaps[l - 1] + 1e-12) {
                    ++acc.monotone;
                    break;
                }
            }
        }
    });

    ChiCheckReport report;
    report.k = k;
    report.reps = reps;
    report.times = n;
    report.u = u;
    report.seed = options.seed;
    ChiPartial total(levels);
    for (const auto& p : partial) {
        total.identity_error = std::max(total.identity_error, p.identity_error);
        total.norm_hits += p.norm_hits;
        total.exact_hits += p.exact_hits;
        total.monotone += p.monotone;
        total.sandwich += p.sandwich;
        for (std::size_t l = 0; l < levels; ++l) {
            total.gap_sum[l].add(p.gap_sum[l]);
            total.gap_max[l] = std::max(total.gap_max[l], p.gap_max[l]);
            total.gap_min[l] = std::min(total.gap_min[l], p.gap_min[l]);
            total.hits[l] += p.hits[l];
        }
    }
    report.max_identity_error = total.identity_error;
    report.norm_hits = total.norm_hits;
    report.exact_hits = total.exact_hits;
    report.monotonicity_violations = total.monotone;
    report.sandwich_violations = total.sandwich;
    for (std::size_t l = 0; l < levels; ++l) {
        report.levels.push_back({direction_levels[l].size(),
                                 reps == 0 ? 0.0 : total.gap_sum[l].value() / static_cast<double>(reps),
                                 total.gap_max[l], total.gap_min[l], total.hits[l]});
    }
    return report;
}

// --- ratio harness -------------------------------------------------------------

RatioReport ratio_experiment(const FieldSpec& spec, const std::vector<double>& u_list,
                             const std::vector<PickandsValue>& pickands, const RatioOptions& options) {
    if (u_list.empty()) throw DomainError("ratio_experiment: empty threshold list");
    for (std::size_t i = 1; i < u_list.size(); ++i) {
        if (!(u_list[i] > u_list[i - 1])) throw DomainError("ratio_experiment: thresholds must increase");
    }
    if (options.reps < 100) throw DomainError("ratio_experiment: reps must be at least 100");
    RatioReport report;
    report.spec_name = spec.name;
    report.reps = options.reps;
    report.seed = options.mc.seed;
    for (double u : u_list) {
        const Grid base = tail_grid(spec, u, options.refine);
        const Grid fine = tail_grid(spec, u, 2 * options.refine);
        const auto sups = sample_suprema(spec, fine, options.reps, options.mc, 2);
        report.sampler = sups.sampler;
        report.jitter = std::max(report.jitter, sups.jitter);
        RatioRow row;
        row.u = u;
        row.asymptotic = tail_asymptotic(spec, pickands, u);
        row.mc = tail_from_suprema(spec, u, base, sups.coarse, options.mc, row.asymptotic.probability);
        row.mc_refined = tail_from_suprema(spec, u, fine, sups.fine, options.mc, row.asymptotic.probability);
        row.mc.sampler = row.mc_refined.sampler = sups.sampler;
        row.ratio = row.mc.estimate / row.asymptotic.probability;
        row.ratio_refined = row.mc_refined.estimate / row.asymptotic.probability;
        report.rows.push_back(std::move(row));
    }
    return report;
}

// --- serialization -------------------------------------------------------------

nlohmann::json to_json(const McTailEstimate& est) {
    nlohmann::json j{{"spec", est.spec_name},
                     {"u", est.u},
                     {"grid_counts", est.grid_counts},
                     {"grid_steps", est.grid_steps},
                     {"reps", est.reps},
                     {"hits", est.hits},
                     {"estimate", est.estimate},
                     {"ci95", {est.ci_lower, est.ci_upper}},
                     {"seed", est.seed},
                     {"rng", std::string(PhiloxStream::kAlgorithm)},
                     {"sampler", est.sampler},
                     {"flags", est.flags}};
    j["expected_hits"] = est.expected_hits ? nlohmann::json(*est.expected_hits) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const ChiCheckReport& r) {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& l : r.levels) {
        levels.push_back({{"directions", l.directions},
                          {"mean_gap", l.mean_gap},
                          {"max_gap", l.max_gap},
                          {"min_gap", l.min_gap},
                          {"hits", l.hits}});
    }
    return {{"k", r.k},
            {"reps", r.reps},
            {"times", r.times},
            {"u", r.u},
            {"seed", r.seed},
            {"rng", std::string(PhiloxStream::kAlgorithm)},
            {"max_identity_error", r.max_identity_error},
            {"norm_hits", r.norm_hits},
            {"exact_direction_hits", r.exact_hits},
            {"levels", levels},
            {"monotonicity_violations", r.monotonicity_violations},
            {"sandwich_violations", r.sandwich_violations}};
}

nlohmann::json to_json(const RatioReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"u", row.u},
                        {"mc", to_json(row.mc)},
                        {"mc_refined", to_json(row.mc_refined)},
                        {"asymptotic", to_json(row.asymptotic)},
                        {"ratio", row.ratio},
                        {"ratio_refined", row.ratio_refined}});
    }
    return {{"spec", r.spec_name},
            {"reps", r.reps},
            {"seed", r.seed},
            {"rng", std::string(PhiloxStream::kAlgorithm)},
            {"grid_policy", "per-threshold resolution rule, refined grid doubles every axis"},
            {"sampler", r.sampler},
            {"jitter", r.jitter},
            {"rows", rows}};
}

std::string ratio_csv(const RatioReport& r) {
    std::ostringstream out;
    out << "u,mc_estimate,ci_lo,ci_hi,asymptotic,ratio\n";
    for (const auto& row : r.rows) {
        out << format_double(row.u) << ',' << format_double(row.mc.estimate) << ',' << format_double(row.mc.ci_lower)
            << ',' << format_double(row.mc.ci_upper) << ',' << format_double(row.asymptotic.probability) << ','
            << format_double(row.ratio) << '\n';
    }
    return out.str();
}

}  // namespace lsgrf
