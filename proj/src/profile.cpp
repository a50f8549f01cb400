#include "lsgrf/profile.hpp"

#include "lsgrf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lsgrf {

std::string to_string(ProfileKind kind) {
    switch (kind) {
        case ProfileKind::Constant: return "constant";
        case ProfileKind::UniqueMin: return "unique_min";
        case ProfileKind::Plateau: return "plateau";
    }
    return "unknown";
}

namespace {

void require_exponent(double alpha0, const char* who) {
    if (!(alpha0 > 0.0 && alpha0 <= 2.0)) {
        throw DomainError(std::string(who) + ": alpha0 must lie in (0, 2]");
    }
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string(name) + " must be a positive finite number");
    }
}

}  // namespace

AlphaProfile AlphaProfile::constant(double alpha0) {
    require_exponent(alpha0, "constant profile");
    AlphaProfile p;
    p.kind_ = ProfileKind::Constant;
    p.alpha0_ = alpha0;
    return p;
}

AlphaProfile AlphaProfile::unique_min(double alpha0, double t0, double M, double beta,
                                      double delta_log) {
    return multi_well(alpha0, {t0}, M, beta, delta_log);
}

AlphaProfile AlphaProfile::multi_well(double alpha0, std::vector<double> wells, double M,
                                      double beta, double delta_log) {
    require_exponent(alpha0, "unique_min profile");
    if (alpha0 >= kMaxExponent) {
        throw DomainError("unique_min profile: alpha0 must be below the clamp 2 - 1e-6");
    }
    if (wells.empty()) throw DomainError("unique_min profile: no minimizer given");
    if (!(M >= 0.0) || !std::isfinite(M)) throw DomainError("M must be non-negative");
    require_positive(beta, "beta");
    AlphaProfile p;
    p.kind_ = ProfileKind::UniqueMin;
    p.alpha0_ = alpha0;
    p.wells_ = std::move(wells);
    p.M_ = M;
    p.beta_ = beta;
    p.delta_log_ = delta_log;
    return p;
}

AlphaProfile AlphaProfile::plateau(double alpha0, double a, double b, double M, double beta,
                                   double M_tilde, double beta_tilde, double delta_log) {
    require_exponent(alpha0, "plateau profile");
    if (alpha0 >= kMaxExponent) {
        throw DomainError("plateau profile: alpha0 must be below the clamp 2 - 1e-6");
    }
    if (!(a < b)) throw DomainError("plateau profile: need a < b");
    require_positive(M, "M");
    require_positive(beta, "beta");
    require_positive(M_tilde, "M_tilde");
    require_positive(beta_tilde, "beta_tilde");
    AlphaProfile p;
    p.kind_ = ProfileKind::Plateau;
    p.alpha0_ = alpha0;
    p.a_ = a;
    p.b_ = b;
    p.M_ = M;
    p.beta_ = beta;
    p.M_tilde_ = M_tilde;
    p.beta_tilde_ = beta_tilde;
    p.delta_log_ = delta_log;
    return p;
}

double AlphaProfile::operator()(double t) const {
    switch (kind_) {
        case ProfileKind::Constant:
            return alpha0_;
        case ProfileKind::UniqueMin: {
            double dist = std::numeric_limits<double>::infinity();
            for (double w : wells_) dist = std::min(dist, std::abs(t - w));
            return std::min(alpha0_ + M_ * std::pow(dist, beta_), kMaxExponent);
        }
        case ProfileKind::Plateau:
            if (t > b_) return std::min(alpha0_ + M_ * std::pow(t - b_, beta_), kMaxExponent);
            if (t < a_) {
                return std::min(alpha0_ + M_tilde_ * std::pow(a_ - t, beta_tilde_), kMaxExponent);
            }
            return alpha0_;
    }
    return alpha0_;
}

}  // namespace lsgrf
