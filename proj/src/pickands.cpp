#include "lsgrf/pickands.hpp"

#include "lsgrf/error.hpp"
#include "lsgrf/parallel.hpp"
#include "lsgrf/rng.hpp"
#include "lsgrf/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

namespace lsgrf {

namespace {

constexpr std::uint64_t kIntervalPurpose = 1;
constexpr std::uint64_t kDomainPurpose = 2;

// Fractions of the horizon at which E exp(sup) is tracked: T/8, T/4, T/2, T.
constexpr std::array<std::size_t, 4> kHorizonDivisors = {8, 4, 2, 1};

struct IntervalAccumulators {
    std::array<MeanAccumulator, 3> finite;
    std::array<MeanAccumulator, 3> limit;
    MeanAccumulator d_coarse;
    MeanAccumulator d_fine;
    MeanAccumulator raw;

    void merge(const IntervalAccumulators& o) {
        for (std::size_t f = 0; f < 3; ++f) {
            finite[f].merge(o.finite[f]);
            limit[f].merge(o.limit[f]);
        }
        d_coarse.merge(o.d_coarse);
        d_fine.merge(o.d_fine);
        raw.merge(o.raw);
    }
};

}  // namespace

double default_pickands_horizon(double alpha) { return alpha >= 1.0 ? 16.0 : 8.0; }

PickandsEstimate estimate_pickands(double alpha, double horizon, double step, std::size_t reps,
                                   const PickandsOptions& options) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("estimate_pickands: alpha must lie in (0, 2]");
    if (!(step > 0.0) || !(horizon > 0.0) || step > horizon) {
        throw DomainError("estimate_pickands: need 0 < step <= horizon");
    }
    if (reps == 0) throw DomainError("estimate_pickands: reps must be positive");
    const auto intervals = static_cast<std::size_t>(std::llround(horizon / step));
    if (intervals < 8) throw DomainError("estimate_pickands: horizon must span at least 8 steps");

    std::array<std::size_t, 4> cut{};   // coarse interval counts per tracked horizon
    std::array<double, 4> span{};
    for (std::size_t f = 0; f < 4; ++f) {
        cut[f] = intervals / kHorizonDivisors[f];
        span[f] = static_cast<double>(cut[f]) * step;
    }

    const double half = step / 2.0;
    const std::size_t fine_points = 2 * intervals + 1;
    std::vector<double> power(fine_points);  // (m h/2)^alpha
    for (std::size_t m = 0; m < fine_points; ++m) power[m] = std::pow(static_cast<double>(m) * half, alpha);

    std::shared_ptr<SpectralFbm> spectral;
    if (alpha < 2.0) spectral = std::make_shared<SpectralFbm>(alpha, half, fine_points);
    const double ratio = std::pow(2.0, alpha / 2.0);
    const double n_fine = static_cast<double>(fine_points);

    const std::size_t chunks = chunk_count(reps);
    std::vector<IntervalAccumulators> partial(chunks);
    parallel_for_chunks(chunks, options.threads, [&](std::size_t c) {
        std::vector<double> b(fine_points), w(fine_points);
        std::optional<SpectralFbm::Workspace> ws;
        if (spectral) ws.emplace(2 * (fine_points - 1));
        auto& acc = partial[c];
        const std::size_t begin = c * kReplicationsPerChunk;
        const std::size_t end = std::min(reps, begin + kReplicationsPerChunk);
        for (std::size_t r = begin; r < end; ++r) {
            PhiloxStream rng(options.seed, stream_id(kIntervalPurpose, r));
            if (spectral) {
                spectral->sample(rng, b, *ws);
            } else {
                const double n = rng.normal();
                for (std::size_t j = 0; j < fine_points; ++j) b[j] = static_cast<double>(j) * half * n;
            }
            const std::size_t tilt = rng.below(fine_points);
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < fine_points; ++j) {
                const std::size_t lag = j > tilt ? j - tilt : tilt - j;
                w[j] = std::numbers::sqrt2 * b[j] + power[tilt] - power[lag];
                mx = std::max(mx, w[j]);
            }
            double den = 0.0;
            for (std::size_t j = 0; j < fine_points; ++j) den += std::exp(w[j] - mx);

            std::array<double, 4> h_fine{}, h_coarse{};
            double run_fine = -std::numeric_limits<double>::infinity();
            double run_coarse = run_fine;
            std::size_t j = 0;
            for (std::size_t f = 0; f < 4; ++f) {
                for (; j <= 2 * cut[f]; ++j) {
                    run_fine = std::max(run_fine, w[j]);
                    if (j % 2 == 0) run_coarse = std::max(run_coarse, w[j]);
                }
                h_fine[f] = n_fine * std::exp(run_fine - mx) / den;
                h_coarse[f] = n_fine * std::exp(run_coarse - mx) / den;
            }
            for (std::size_t f = 1; f < 4; ++f) {
                const double width = span[f] - span[f - 1];
                const double dc = (h_coarse[f] - h_coarse[f - 1]) / width;
                const double df = (h_fine[f] - h_fine[f - 1]) / width;
                acc.finite[f - 1].add(h_coarse[f] / span[f]);
                acc.limit[f - 1].add((ratio * df - dc) / (ratio - 1.0));
                if (f == 3) {
                    acc.d_coarse.add(dc);
                    acc.d_fine.add(df);
                }
            }
            acc.raw.add(h_coarse[3]);
        }
    });
    IntervalAccumulators total;
    for (const auto& p : partial) total.merge(p);

    PickandsEstimate est;
    est.alpha = {alpha};
    std::ostringstream dom;
    dom << "interval [0, " << span[3] << "]";
    est.domain = dom.str();
    est.horizon = span[3];
    est.step = step;
    est.reps = reps;
    est.seed = options.seed;
    est.estimate = total.limit[2].mean();
    est.standard_error = total.limit[2].standard_error();
    est.finite_horizon = total.finite[2].mean();
    est.finite_horizon_se = total.finite[2].standard_error();
    est.domain_value = total.raw.mean();
    est.domain_value_se = total.raw.standard_error();
    est.richardson_step = total.d_coarse.mean();
    est.richardson_step_se = total.d_coarse.standard_error();
    est.richardson_half_step = total.d_fine.mean();
    est.richardson_half_step_se = total.d_fine.standard_error();
    for (std::size_t f = 0; f < 3; ++f) {
        est.trace.push_back({span[f + 1], total.limit[f].mean(), total.limit[f].standard_error(),
                             total.finite[f].mean(), total.finite[f].standard_error()});
    }
    return est;
}

PickandsEstimate estimate_pickands_domain(const std::vector<double>& alpha, const Grid& domain, std::size_t reps,
                                          const PickandsOptions& options) {
    const std::size_t k = alpha.size();
    if (k == 0 || k != domain.dim()) throw DomainError("estimate_pickands_domain: alpha/grid dimension mismatch");
    if (reps == 0) throw DomainError("estimate_pickands_domain: reps must be positive");
    std::vector<FbmNodeSampler> samplers;
    std::vector<std::vector<double>> powers(k);
    for (std::size_t i = 0; i < k; ++i) {
        samplers.emplace_back(alpha[i], domain.axis(i));
        for (double x : domain.axis(i)) powers[i].push_back(std::pow(x, alpha[i]));
    }

    const std::size_t chunks = chunk_count(reps);
    std::vector<MeanAccumulator> partial(chunks);
    parallel_for_chunks(chunks, options.threads, [&](std::size_t c) {
        std::vector<FbmNodeSampler::Workspace> ws;
        std::vector<std::vector<double>> b(k);
        for (std::size_t i = 0; i < k; ++i) {
            ws.push_back(samplers[i].workspace());
            b[i].resize(domain.axis(i).size());
        }
        std::vector<double> w;
        const std::size_t begin = c * kReplicationsPerChunk;
        const std::size_t end = std::min(reps, begin + kReplicationsPerChunk);
        for (std::size_t r = begin; r < end; ++r) {
            PhiloxStream rng(options.seed, stream_id(kDomainPurpose, r));
            for (std::size_t i = 0; i < k; ++i) samplers[i].sample(rng, b[i], ws[i]);
            // The tilt point is uniform on the product grid, i.e. uniform per axis.
            double value = 1.0;
            for (std::size_t i = 0; i < k; ++i) {
                const auto& nodes = domain.axis(i);
                const std::size_t n = nodes.size();
                const std::size_t tilt = rng.below(n);
                const double s = nodes[tilt];
                w.resize(n);
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < n; ++j) {
                    w[j] = std::numbers::sqrt2 * b[i][j] + powers[i][tilt] - std::pow(std::abs(nodes[j] - s), alpha[i]);
                    mx = std::max(mx, w[j]);
                }
                double den = 0.0;
                for (std::size_t j = 0; j < n; ++j) den += std::exp(w[j] - mx);
                value *= static_cast<double>(n) / den;
            }
            partial[c].add(value);
        }
    });
    MeanAccumulator total;
    for (const auto& p : partial) total.merge(p);

    PickandsEstimate est;
    est.alpha = alpha;
    std::ostringstream dom;
    dom << "grid";
    double volume = 1.0;
    double extent = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& ax = domain.axis(i);
        dom << (i == 0 ? " " : " x ") << "[" << ax.front() << ", " << ax.back() << "]/" << ax.size();
        volume *= ax.back() - ax.front();
        extent = std::max(extent, ax.back());
    }
    est.domain = dom.str();
    est.horizon = extent;
    est.step = domain.axis(0).size() > 1 ? domain.axis(0)[1] - domain.axis(0)[0] : 0.0;
    est.reps = reps;
    est.seed = options.seed;
    est.estimate = total.mean();
    est.standard_error = total.standard_error();
    est.domain_value = est.estimate;
    est.domain_value_se = est.standard_error;
    if (volume > 0.0) {
        est.finite_horizon = est.estimate / volume;
        est.finite_horizon_se = est.standard_error / volume;
    }
    est.trace.push_back({extent, est.estimate, est.standard_error, est.finite_horizon, est.finite_horizon_se});
    return est;
}

nlohmann::json to_json(const PickandsEstimate& est) {
    nlohmann::json j;
    j["alpha"] = est.alpha.size() == 1 ? nlohmann::json(est.alpha[0]) : nlohmann::json(est.alpha);
    j["domain"] = est.domain;
    j["horizon"] = est.horizon;
    j["step"] = est.step;
    j["reps"] = est.reps;
    j["seed"] = est.seed;
    j["rng"] = std::string(PhiloxStream::kAlgorithm);
    j["estimator"] = "grid-mixture tilted";
    j["estimate"] = est.estimate;
    j["standard_error"] = est.standard_error;
    j["finite_horizon"] = {{"estimate", est.finite_horizon}, {"standard_error", est.finite_horizon_se}};
    j["domain_value"] = {{"estimate", est.domain_value}, {"standard_error", est.domain_value_se}};
    j["richardson"] = {{"step", est.step},
                       {"at_step", est.richardson_step},
                       {"at_step_se", est.richardson_step_se},
                       {"at_half_step", est.richardson_half_step},
                       {"at_half_step_se", est.richardson_half_step_se}};
    j["trace"] = nlohmann::json::array();
    for (const auto& t : est.trace) {
        j["trace"].push_back({{"horizon", t.horizon},
                              {"estimate", t.estimate},
                              {"standard_error", t.standard_error},
                              {"finite_horizon", t.finite_horizon},
                              {"finite_horizon_se", t.finite_horizon_se}});
    }
    return j;
}

PickandsEstimate pickands_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw SpecError("", "Pickands record must be an object");
    PickandsEstimate est;
    const auto it = doc.find("alpha");
    if (it == doc.end()) throw SpecError("/alpha", "missing required field");
    if (it->is_array()) {
        est.alpha = it->get<std::vector<double>>();
    } else if (it->is_number()) {
        est.alpha = {it->get<double>()};
    } else {
        throw SpecError("/alpha", "expected a number or array");
    }
    const auto e = doc.find("estimate");
    if (e == doc.end() || !e->is_number()) throw SpecError("/estimate", "expected a number");
    est.estimate = e->get<double>();
    if (auto se = doc.find("standard_error"); se != doc.end() && se->is_number()) {
        est.standard_error = se->get<double>();
    }
    if (auto h = doc.find("horizon"); h != doc.end() && h->is_number()) est.horizon = h->get<double>();
    if (auto s = doc.find("step"); s != doc.end() && s->is_number()) est.step = s->get<double>();
    if (auto r = doc.find("reps"); r != doc.end() && r->is_number_unsigned()) est.reps = r->get<std::size_t>();
    if (auto s = doc.find("seed"); s != doc.end() && s->is_number_unsigned()) est.seed = s->get<std::uint64_t>();
    return est;
}

}  // namespace lsgrf
