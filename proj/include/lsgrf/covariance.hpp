#pragma once

#include "lsgrf/field_spec.hpp"
#include "lsgrf/grid.hpp"
#include "lsgrf/profile.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lsgrf {

// mfBm normalizer D(x) = 2 pi / (Gamma(x + 1) sin(pi x / 2)), evaluated through lgamma.
// Throws DomainError outside (0, 2).
double mfbm_normalizer(double x);

// E[B(s) B(t)] of an mfBm with pointwise exponents alpha_s = alpha(s), alpha_t = alpha(t).
double mfbm_cov_exponents(double s, double t, double alpha_s, double alpha_t);
double mfbm_cov(double s, double t, const AlphaProfile& profile);

// Correlation of the standardized mfBm. Times must be strictly positive.
double std_mfbm_cov_exponents(double s, double t, double alpha_s, double alpha_t);
double std_mfbm_cov(double s, double t, const AlphaProfile& profile);

// Same correlation from log-times; used where the time change overflows plain doubles.
double std_mfbm_cov_log_times(double log_s, double log_t, double alpha_s, double alpha_t);

// k^{-1} sum_i std_mfbm_cov(t_i, s_i, profile_i).
double aggregate_cov(std::span<const double> t, std::span<const double> s, const FieldSpec& spec);

// Covariance of Y(t, u) = sum_i B_i(t) u_i on the cylinder [T1, T2] x S_{k-1}.
double chi_cylinder_cov(double t, std::span<const double> u, double s, std::span<const double> v,
                        const AlphaProfile& profile);

inline constexpr double kUnitVectorTolerance = 1e-10;
void require_unit_vector(std::span<const double> u);

// A covariance function on R^dim. Evaluation is done on the lexicographically
// ordered pair, which makes k(p, q) and k(q, p) bit-identical.
//
// An additive kernel is k^{-1} sum_i c_i(t_i, s_i) for one-dimensional
// components c_i; such a field is the scaled sum of independent coordinate
// processes and can be sampled one axis at a time.
class Kernel {
public:
    using Fn = std::function<double(std::span<const double>, std::span<const double>)>;

    Kernel(std::string name, std::size_t dim, Fn fn, std::vector<Kernel> components = {});

    double operator()(std::span<const double> p, std::span<const double> q) const;

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] bool additive() const noexcept { return !components_.empty(); }
    [[nodiscard]] const std::vector<Kernel>& components() const noexcept { return components_; }

private:
    std::string name_;
    std::size_t dim_;
    Fn fn_;
    std::vector<Kernel> components_;
};

// exp(-sum_i c_i |t_i - s_i|^alpha_i).
Kernel powered_exponential_kernel(std::vector<double> scales, std::vector<double> alphas);
// Unnormalized fBm covariance (t^a + s^a - |t - s|^a) / 2, one-dimensional.
Kernel fbm_kernel(double alpha);
Kernel std_mfbm_kernel(const AlphaProfile& profile);
Kernel aggregate_mfbm_kernel(const FieldSpec& spec);
// Aggregate of standardized mfBm's run on clocks phi_i with
// phi_i'/phi_i = (2k C_i(t_i))^{1/alpha_i(t_i)}, which realizes the expansion
// 1 - r(t, t+s) ~ sum_i C_i(t_i)|s_i|^{alpha_i(t_i)} for the spec's own profiles and scales.
Kernel time_changed_mfbm_kernel(const FieldSpec& spec);
// Kernel named by spec.kernel.
Kernel make_kernel(const FieldSpec& spec);

// --- local-stationarity expansion check ---------------------------------------

struct D4Options {
    std::vector<double> radii;  // decreasing; empty means default log grid on [1e-4, 1e-1]
    double tolerance = 0.1;
    double error_floor = 1e-9;  // errors below this count as converged
};

std::vector<double> default_d4_radii();

struct D4Report {
    std::vector<double> point;
    std::vector<double> radii;
    std::vector<std::vector<double>> ratios;  // [direction][radius]
    std::vector<std::vector<double>> directions;
    std::vector<double> max_error;            // per radius, over directions
    bool converged = false;
    std::string message;
};

D4Report verify_d4_expansion(const FieldSpec& spec, const Kernel& kernel, std::span<const double> t,
                             const D4Options& options = {});

// --- covariance matrices ----------------------------------------------------------

inline constexpr double kMaxJitter = 1e-6;

struct CovMatrix {
    Eigen::MatrixXd cov;
    Eigen::MatrixXd factor;  // lower triangular, cov + jitter I = factor factor^T
    double jitter = 0.0;
    double grid_margin = 1.0;  // 1 - max off-diagonal correlation
};

CovMatrix build_cov_matrix(const std::vector<std::vector<double>>& points, const Kernel& kernel,
                           std::size_t threads = 1);
CovMatrix build_cov_matrix(const Grid& grid, const Kernel& kernel, std::size_t threads = 1);

// Jitter escalation used by build_cov_matrix: 0, 1e-12, 1e-11, ..., 1e-6.
Eigen::MatrixXd factorize_with_jitter(const Eigen::MatrixXd& cov, double& jitter_used);

}  // namespace lsgrf
