#pragma once

#include <string>
#include <vector>

namespace lsgrf {

enum class ProfileKind { Constant, UniqueMin, Plateau };

std::string to_string(ProfileKind kind);

// Hölder exponent function alpha(t) from one of three parametric families:
//
//   Constant   alpha(t) = alpha0
//   UniqueMin  alpha(t) = alpha0 + M |t - t0|^beta
//   Plateau    alpha(t) = alpha0                          on [a, b]
//              alpha(t) = alpha0 + M (t - b)^beta          for t > b
//              alpha(t) = alpha0 + M_tilde (a - t)^beta_tilde  for t < a
//
// Non-constant families are clamped to at most kMaxExponent.
// delta_log is metadata only.
//
// A UniqueMin profile may carry several wells (alpha0 + M min_j|t - t0_j|^beta);
// validation then reports A1 as failed.
class AlphaProfile {
public:
    static constexpr double kMaxExponent = 2.0 - 1e-6;

    static AlphaProfile constant(double alpha0);
    static AlphaProfile unique_min(double alpha0, double t0, double M, double beta,
                                   double delta_log = 2.0);
    static AlphaProfile plateau(double alpha0, double a, double b, double M, double beta,
                                double M_tilde, double beta_tilde, double delta_log = 2.0);
    static AlphaProfile multi_well(double alpha0, std::vector<double> wells, double M,
                                   double beta, double delta_log = 2.0);

    [[nodiscard]] double operator()(double t) const;

    [[nodiscard]] ProfileKind kind() const noexcept { return kind_; }
    [[nodiscard]] double alpha0() const noexcept { return alpha0_; }
    [[nodiscard]] double t0() const { return wells_.at(0); }
    [[nodiscard]] const std::vector<double>& wells() const noexcept { return wells_; }
    [[nodiscard]] double M() const noexcept { return M_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] double a() const noexcept { return a_; }
    [[nodiscard]] double b() const noexcept { return b_; }
    [[nodiscard]] double M_tilde() const noexcept { return M_tilde_; }
    [[nodiscard]] double beta_tilde() const noexcept { return beta_tilde_; }
    [[nodiscard]] double delta_log() const noexcept { return delta_log_; }

private:
    AlphaProfile() = default;

    ProfileKind kind_ = ProfileKind::Constant;
    double alpha0_ = 1.0;
    std::vector<double> wells_;
    double M_ = 0.0;
    double beta_ = 1.0;
    double a_ = 0.0;
    double b_ = 0.0;
    double M_tilde_ = 0.0;
    double beta_tilde_ = 1.0;
    double delta_log_ = 2.0;
};

}  // namespace lsgrf
