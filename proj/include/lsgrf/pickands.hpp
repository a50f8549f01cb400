#pragma once

#include "lsgrf/grid.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace lsgrf {

struct PickandsOptions {
    std::uint64_t seed = 1;
    std::size_t threads = 0;
};

struct PickandsTracePoint {
    double horizon = 0.0;
    double estimate = 0.0;        // boundary- and step-corrected value at this horizon
    double standard_error = 0.0;
    double finite_horizon = 0.0;  // horizon^{-1} E exp(sup over the step grid on [0, horizon])
    double finite_horizon_se = 0.0;
};

// Monte Carlo estimate of H_alpha or H_{(k, alpha)}[D].
//
// Every expectation is computed under the uniform mixture of the measures
// tilted by exp(W(s)) over the grid points s, where
// W(t) = sqrt(2) B(t) - |t|_alpha has E exp(W(s)) = 1. The estimator
// n exp(max W) / sum_j exp(W(t_j)) is unbiased for E exp(max W) on the same
// grid and bounded by the point count n.
//
// For intervals, `estimate` targets the limit H_alpha:
//   D_h(T) = (E exp(sup_[0,T]) - E exp(sup_[0,T/2])) / (T/2) removes the
//   O(1) boundary term of E exp(sup_[0,T]), and
//   (2^{alpha/2} D_{h/2}(T) - D_h(T)) / (2^{alpha/2} - 1) removes the
//   leading h^{alpha/2} discretization bias.
// `finite_horizon` is the plain T^{-1} E exp(sup) on the step grid.
struct PickandsEstimate {
    std::vector<double> alpha;
    std::string domain;
    double horizon = 0.0;
    double step = 0.0;
    std::size_t reps = 0;
    std::uint64_t seed = 0;

    double estimate = 0.0;
    double standard_error = 0.0;

    double finite_horizon = 0.0;
    double finite_horizon_se = 0.0;
    double domain_value = 0.0;  // E exp(sup over the grid), unnormalized
    double domain_value_se = 0.0;

    double richardson_step = 0.0;       // D_h(T)
    double richardson_half_step = 0.0;  // D_{h/2}(T)
    double richardson_step_se = 0.0;
    double richardson_half_step_se = 0.0;

    std::vector<PickandsTracePoint> trace;
};

inline constexpr double kDefaultPickandsStep = 0.01;
double default_pickands_horizon(double alpha);

PickandsEstimate estimate_pickands(double alpha, double horizon, double step, std::size_t reps,
                                   const PickandsOptions& options = {});

// H_{(k, alpha)}[D] over a rectangular grid D in [0, inf)^k.
PickandsEstimate estimate_pickands_domain(const std::vector<double>& alpha, const Grid& domain, std::size_t reps,
                                          const PickandsOptions& options = {});

nlohmann::json to_json(const PickandsEstimate& est);
PickandsEstimate pickands_from_json(const nlohmann::json& doc);

}  // namespace lsgrf
