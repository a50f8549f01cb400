#pragma once

#include "lsgrf/field_spec.hpp"
#include "lsgrf/pickands.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace lsgrf {

// Standard normal survival function, in extended precision.
long double mills_survival(long double u);
double log_mills_survival(double u);

struct TailExponents {
    double alpha_exp = 0.0;  // 2 sum_i 1/alpha_i
    double beta_exp = 0.0;   // -sum_{i<=k1} 1/beta_i
};

TailExponents compute_exponents(const FieldSpec& spec);

// A Pickands constant supplied to the asymptotics, with optional MC error.
struct PickandsValue {
    double value = 0.0;
    double standard_error = 0.0;
    std::string source;
};

// Closed forms: H_1 = 1, H_2 = 1/sqrt(pi).
std::optional<PickandsValue> known_pickands(double alpha);

// Maps exponent values to constants; lookups match within 1e-12.
class PickandsTable {
public:
    void set(double alpha, PickandsValue value);
    [[nodiscard]] std::optional<PickandsValue> find(double alpha) const;
    // find() or the closed form; throws DomainError when neither exists.
    [[nodiscard]] PickandsValue resolve(double alpha) const;
    [[nodiscard]] std::vector<PickandsValue> for_spec(const FieldSpec& spec) const;
    [[nodiscard]] const std::vector<std::pair<double, PickandsValue>>& entries() const noexcept { return entries_; }

private:
    std::vector<std::pair<double, PickandsValue>> entries_;
};

// Accepts a PickandsEstimate record, an array of them, or
// {"constants": [{"alpha":..., "value":..., "standard_error":...}, ...]}.
PickandsTable pickands_table_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const PickandsTable& table);

// One multiplicative factor; value == exp(log_value).
struct LedgerEntry {
    std::string name;
    double value = 0.0;
    double log_value = 0.0;
};

struct TailConstant {
    double K = 0.0;
    double log_K = 0.0;
    int q = 0;
    double integral = 0.0;
    double integral_error = 0.0;
    double K_lower = 0.0;  // propagated from Pickands standard errors (z = 1.96)
    double K_upper = 0.0;
    std::vector<LedgerEntry> ledger;
};

inline constexpr double kIntegralRelativeTolerance = 1e-8;

// Throws IntegrationError if the plateau-box quadrature misses its tolerance.
TailConstant compute_constant(const FieldSpec& spec, const std::vector<PickandsValue>& pickands);

struct TailResult {
    std::string formula;
    double alpha_exp = 0.0;
    double beta_exp = 0.0;
    double K = 0.0;
    double K_lower = 0.0;
    double K_upper = 0.0;
    int q = 0;
    double u = 0.0;
    double probability = 0.0;
    double log_probability = 0.0;
    std::vector<LedgerEntry> ledger;  // every factor of the probability
    std::vector<std::string> flags;

    [[nodiscard]] bool has_flag(const std::string& flag) const;
};

// Flag names.
inline constexpr const char* kPreAsymptotic = "pre_asymptotic";
inline constexpr const char* kExceedsOne = "exceeds_one";
inline constexpr double kPreAsymptoticLevel = 0.1;

// Requires u > 1 (u > 0 when beta_exp = 0). u <= e is accepted but flagged
// pre_asymptotic, as is any approximation above 0.1.
TailResult tail_asymptotic(const FieldSpec& spec, const std::vector<PickandsValue>& pickands, double u);

struct AggregateCoordinate {
    double alpha = 1.0;
    double beta = 2.0;
    double M = 1.0;
    double t0 = 1.0;
};

struct AggregateParams {
    std::vector<AggregateCoordinate> coordinates;
    double T1 = 0.5;
    double T2 = 2.0;
    double delta_log = 2.0;
};

TailResult aggregate_mfbm_tail(const AggregateParams& params, const std::vector<PickandsValue>& pickands, double u);

// The FieldSpec whose general tail equals aggregate_mfbm_tail.
FieldSpec induced_aggregate_spec(const AggregateParams& params);

struct ChiParams {
    std::size_t k = 1;
    double alpha = 1.0;  // alpha(t0)
    double beta = 2.0;
    double M = 1.0;
    double t0 = 1.0;
    double T1 = 0.5;
    double T2 = 2.0;
};

TailResult chi_tail(const ChiParams& params, const PickandsValue& pickands, double u);

nlohmann::json to_json(const TailConstant& constant);
nlohmann::json to_json(const TailResult& result);

}  // namespace lsgrf
