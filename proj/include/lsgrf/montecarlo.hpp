#pragma once

#include "lsgrf/asymptotics.hpp"
#include "lsgrf/field_spec.hpp"
#include "lsgrf/grid.hpp"
#include "lsgrf/profile.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lsgrf {

struct McOptions {
    std::uint64_t seed = 1;
    std::size_t threads = 0;
};

inline constexpr double kWilsonZ = 1.959964;

struct WilsonInterval {
    double lower = 0.0;
    double upper = 1.0;
};

WilsonInterval wilson_interval(std::size_t hits, std::size_t reps, double z = kWilsonZ);

// Per-axis grid step required at threshold u: 0.1 u^{-2/alpha}.
double resolution_step(double alpha, double u);

// Uniform grid on the spec's hypercube meeting the resolution rule at u on
// every axis, with the interval counts multiplied by `refine`.
Grid tail_grid(const FieldSpec& spec, double u, std::size_t refine = 1);

// Suprema of a field over a grid, one per replication. When `stride` is 2
// the grid is treated as a refinement and the supremum over the nodes with
// even index on every axis is returned as well, from the same paths.
struct SupSamples {
    std::vector<double> fine;
    std::vector<double> coarse;
    std::string sampler;  // "per-axis cholesky" or "cholesky"
    double jitter = 0.0;
};

SupSamples sample_suprema(const FieldSpec& spec, const Grid& grid, std::size_t reps, const McOptions& options,
                          std::size_t stride = 1);

// Underpowered runs (expected hits below this) are flagged.
inline constexpr double kMinExpectedHits = 10.0;

struct McTailEstimate {
    std::string spec_name;
    double u = 0.0;
    std::vector<std::size_t> grid_counts;
    std::vector<double> grid_steps;
    std::size_t reps = 0;
    std::size_t hits = 0;
    double estimate = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> expected_hits;
    std::string sampler;
    std::vector<std::string> flags;

    [[nodiscard]] bool has_flag(const std::string& flag) const;
};

inline constexpr const char* kUnderpowered = "underpowered";
inline constexpr const char* kCoarseGrid = "grid_coarser_than_rule";

// Crude Monte Carlo estimate of P(max over the grid of X > u). `expected`
// is an approximation of that probability used only for the power check.
McTailEstimate estimate_sup_tail(const FieldSpec& spec, double u, const Grid& grid, std::size_t reps,
                                 const McOptions& options = {}, std::optional<double> expected = std::nullopt);

// Fraction-of-hits estimate from precomputed suprema (strict sup > u).
McTailEstimate tail_from_suprema(const FieldSpec& spec, double u, const Grid& grid, const std::vector<double>& sups,
                                 const McOptions& options, std::optional<double> expected);

// --- chi process -------------------------------------------------------------

// n equally spaced unit vectors on the circle.
std::vector<std::vector<double>> circle_directions(std::size_t n);

struct ChiDirectionLevel {
    std::size_t directions = 0;
    double mean_gap = 0.0;
    double max_gap = 0.0;
    double min_gap = 0.0;
    std::size_t hits = 0;
};

struct ChiCheckReport {
    std::size_t k = 0;
    std::size_t reps = 0;
    std::size_t times = 0;
    double u = 0.0;
    std::uint64_t seed = 0;
    double max_identity_error = 0.0;  // |exact-direction value - norm|, over paths and times
    std::size_t norm_hits = 0;        // max_t |B(t)| > u
    std::size_t exact_hits = 0;       // max_t of the exact-direction evaluation > u
    std::vector<ChiDirectionLevel> levels;
    std::size_t monotonicity_violations = 0;  // replications where a finer level had a larger gap
    std::size_t sandwich_violations = 0;      // replications where a direction grid exceeded the norm
};

// k independent standardized mfBm coordinates with the given profile on
// `times` (all > 0). Each entry of `direction_levels` is a set of unit
// vectors; nested sets give the refinement check.
ChiCheckReport chi_sup_check(const AlphaProfile& profile, std::size_t k, const std::vector<double>& times,
                             const std::vector<std::vector<std::vector<double>>>& direction_levels, std::size_t reps,
                             double u, const McOptions& options = {});

// --- ratio harness -------------------------------------------------------------

struct RatioRow {
    double u = 0.0;
    McTailEstimate mc;
    McTailEstimate mc_refined;  // doubled resolution, same paths
    TailResult asymptotic;
    double ratio = 0.0;
    double ratio_refined = 0.0;
};

struct RatioReport {
    std::string spec_name;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    std::string sampler;
    double jitter = 0.0;
    std::vector<RatioRow> rows;
};

struct RatioOptions {
    std::size_t reps = 100000;
    std::size_t refine = 1;  // multiplies the resolution-rule interval counts
    McOptions mc;
};

// Each threshold gets its own resolution-rule grid and a doubled grid
// sampled on the same paths.
RatioReport ratio_experiment(const FieldSpec& spec, const std::vector<double>& u_list,
                             const std::vector<PickandsValue>& pickands, const RatioOptions& options);

nlohmann::json to_json(const McTailEstimate& est);
nlohmann::json to_json(const ChiCheckReport& report);
nlohmann::json to_json(const RatioReport& report);
// Header: u,mc_estimate,ci_lo,ci_hi,asymptotic,ratio
std::string ratio_csv(const RatioReport& report);

}  // namespace lsgrf
