#pragma once

#include "lsgrf/covariance.hpp"
#include "lsgrf/field_spec.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace lsgrf {

struct ConditionResult {
    std::string name;  // D1..D4, A1, A2, strict_correlation
    bool passed = false;
    std::string message;
    nlohmann::json diagnostics;
};

struct ValidationReport {
    std::string spec_name;
    std::string kernel;
    std::vector<ConditionResult> conditions;

    [[nodiscard]] bool passed() const;
    [[nodiscard]] const ConditionResult& condition(const std::string& name) const;
};

// Interior probe points: fractions 1/4, 1/2, 3/4 of every axis (diagonal only for k > 3).
std::vector<std::vector<double>> probe_points(const FieldSpec& spec);

ValidationReport validate_field_spec(const FieldSpec& spec, const D4Options& d4 = {});

nlohmann::json to_json(const D4Report& report);
nlohmann::json to_json(const ValidationReport& report);

}  // namespace lsgrf
