#include "lsgrf/covariance.hpp"

#include "lsgrf/error.hpp"
#include "lsgrf/parallel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

namespace lsgrf {

namespace {

void require_open_exponent(double x) {
    if (!(x > 0.0 && x < 2.0)) {
        std::ostringstream msg;
        msg << "mfBm exponent " << x << " outside (0, 2)";
        throw DomainError(msg.str());
    }
}

double log_normalizer(double x) {
    require_open_exponent(x);
    return std::log(2.0 * std::numbers::pi) - std::lgamma(x + 1.0) -
           std::log(std::sin(std::numbers::pi * x / 2.0));
}

}  // namespace

double mfbm_normalizer(double x) { return std::exp(log_normalizer(x)); }

double mfbm_cov_exponents(double s, double t, double alpha_s, double alpha_t) {
    if (!(s >= 0.0) || !(t >= 0.0)) throw DomainError("mfbm_cov: times must be non-negative");
    require_open_exponent(alpha_s);
    require_open_exponent(alpha_t);
    if (s > t) {
        std::swap(s, t);
        std::swap(alpha_s, alpha_t);
    }
    const double a = alpha_s / 2.0 + alpha_t / 2.0;
    const double bracket = std::pow(s, a) + std::pow(t, a) - std::pow(t - s, a);
    return 0.5 * mfbm_normalizer(a) * bracket;
}

double mfbm_cov(double s, double t, const AlphaProfile& profile) {
    return mfbm_cov_exponents(s, t, profile(s), profile(t));
}

double std_mfbm_cov_log_times(double log_s, double log_t, double alpha_s, double alpha_t) {
    require_open_exponent(alpha_s);
    require_open_exponent(alpha_t);
    if (log_s > log_t) {
        std::swap(log_s, log_t);
        std::swap(alpha_s, alpha_t);
    }
    const double d = log_s - log_t;  // <= 0
    if (d == 0.0 && alpha_s == alpha_t) return 1.0;
    const double a = alpha_s / 2.0 + alpha_t / 2.0;
    // (s^a + t^a - (t - s)^a) / t^a with s / t = e^d.
    const double gap = d == 0.0 ? 0.0 : std::pow(-std::expm1(d), a);
    const double bracket = std::exp(a * d) + 1.0 - gap;
    const double log_scale = log_normalizer(a) - 0.5 * (log_normalizer(alpha_s) + log_normalizer(alpha_t)) -
                             0.5 * alpha_s * d;
    const double r = 0.5 * std::exp(log_scale) * bracket;
    return std::clamp(r, -1.0, 1.0);
}

double std_mfbm_cov_exponents(double s, double t, double alpha_s, double alpha_t) {
    if (!(s > 0.0) || !(t > 0.0)) throw DomainError("std_mfbm_cov: times must be strictly positive");
    return std_mfbm_cov_log_times(std::log(s), std::log(t), alpha_s, alpha_t);
}

double std_mfbm_cov(double s, double t, const AlphaProfile& profile) {
    if (!(s > 0.0) || !(t > 0.0)) throw DomainError("std_mfbm_cov: times must be strictly positive");
    return std_mfbm_cov_exponents(s, t, profile(s), profile(t));
}

double aggregate_cov(std::span<const double> t, std::span<const double> s, const FieldSpec& spec) {
    if (t.size() != spec.k || s.size() != spec.k) throw DomainError("aggregate_cov: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < spec.k; ++i) acc += std_mfbm_cov(t[i], s[i], spec.profiles[i]);
    return acc / static_cast<double>(spec.k);
}

void require_unit_vector(std::span<const double> u) {
    double sq = 0.0;
    for (double x : u) sq += x * x;
    if (!(std::abs(std::sqrt(sq) - 1.0) <= kUnitVectorTolerance)) {
        throw DomainError("direction vector is not of unit length");
    }
}

double chi_cylinder_cov(double t, std::span<const double> u, double s, std::span<const double> v,
                        const AlphaProfile& profile) {
    if (u.size() != v.size()) throw DomainError("chi_cylinder_cov: direction dimension mismatch");
    require_unit_vector(u);
    require_unit_vector(v);
    const double time_part = std_mfbm_cov(t, s, profile);
    if (t == s && std::equal(u.begin(), u.end(), v.begin())) return 1.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
    return time_part * dot;
}

// --- Kernel -----------------------------------------------------------------

Kernel::Kernel(std::string name, std::size_t dim, Fn fn, std::vector<Kernel> components)
    : name_(std::move(name)), dim_(dim), fn_(std::move(fn)), components_(std::move(components)) {}

double Kernel::operator()(std::span<const double> p, std::span<const double> q) const {
    if (p.size() != dim_ || q.size() != dim_) throw DomainError("kernel '" + name_ + "': dimension mismatch");
    if (std::lexicographical_compare(q.begin(), q.end(), p.begin(), p.end())) return fn_(q, p);
    return fn_(p, q);
}

Kernel powered_exponential_kernel(std::vector<double> scales, std::vector<double> alphas) {
    if (scales.size() != alphas.size() || scales.empty()) throw DomainError("powered_exponential: size mismatch");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0)) throw DomainError("powered_exponential: scales must be positive");
        if (!(alphas[i] > 0.0 && alphas[i] <= 2.0)) throw DomainError("powered_exponential: alpha outside (0, 2]");
    }
    const std::size_t k = scales.size();
    return Kernel("powered_exponential", k, [scales = std::move(scales), alphas = std::move(alphas)](auto p, auto q) {
        double e = 0.0;
        for (std::size_t i = 0; i < scales.size(); ++i) e += scales[i] * std::pow(std::abs(p[i] - q[i]), alphas[i]);
        return std::exp(-e);
    });
}

Kernel fbm_kernel(double alpha) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("fbm_kernel: alpha outside (0, 2]");
    return Kernel("fbm", 1, [alpha](auto p, auto q) {
        const double s = p[0], t = q[0];
        return 0.5 * (std::pow(std::abs(s), alpha) + std::pow(std::abs(t), alpha) - std::pow(std::abs(t - s), alpha));
    });
}

Kernel std_mfbm_kernel(const AlphaProfile& profile) {
    return Kernel("std_mfbm", 1, [profile](auto p, auto q) { return std_mfbm_cov(p[0], q[0], profile); });
}

namespace {

Kernel additive_kernel(std::string name, std::vector<Kernel> components) {
    const std::size_t k = components.size();
    auto shared = components;
    return Kernel(std::move(name), k,
                  [parts = std::move(shared)](auto p, auto q) {
                      double acc = 0.0;
                      for (std::size_t i = 0; i < parts.size(); ++i) {
                          acc += parts[i](p.subspan(i, 1), q.subspan(i, 1));
                      }
                      return acc / static_cast<double>(parts.size());
                  },
                  std::move(components));
}

// log phi(x) = int_lower^x (2k C_i)^{1/alpha_i}, phi(lower) = 1.
class Clock {
public:
    Clock(const FieldSpec& spec, std::size_t axis)
        : profile_(spec.profiles[axis]),
          scale_(spec.variance_scales[axis]),
          axis_(axis),
          k_(spec.k),
          lower_(spec.lower) {
        breaks_ = scale_.breakpoints(axis);
        if (profile_.kind() == ProfileKind::UniqueMin) {
            breaks_.insert(breaks_.end(), profile_.wells().begin(), profile_.wells().end());
        } else if (profile_.kind() == ProfileKind::Plateau) {
            breaks_.push_back(profile_.a());
            breaks_.push_back(profile_.b());
        }
        std::sort(breaks_.begin(), breaks_.end());
        breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
        constant_rate_ = profile_.kind() == ProfileKind::Constant && scale_.is_constant();
        if (constant_rate_) rate_ = rate(lower_);
    }

    [[nodiscard]] double rate(double x) const {
        std::vector<double> pt(k_, lower_);
        pt[axis_] = x;
        const double c = scale_(pt);
        if (!(c > 0.0)) throw DomainError("variance scale must be positive for the time change");
        return std::pow(2.0 * static_cast<double>(k_) * c, 1.0 / profile_(x));
    }

    [[nodiscard]] double log_phi(double x) const {
        if (constant_rate_) return rate_ * (x - lower_);
        double acc = 0.0;
        double left = lower_;
        auto g = [this](double y) { return rate(y); };
        for (double b : breaks_) {
            if (b <= left) continue;
            if (b >= x) break;
            acc += integrate(g, left, b);
            left = b;
        }
        if (x > left) acc += integrate(g, left, x);
        return acc;
    }

private:
    template <class F>
    static double integrate(F& f, double a, double b) {
        double err = 0.0;
        return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 12, 1e-13, &err);
    }

    AlphaProfile profile_;
    VarianceScale scale_;
    std::size_t axis_;
    std::size_t k_;
    double lower_;
    std::vector<double> breaks_;
    bool constant_rate_ = false;
    double rate_ = 0.0;
};

}  // namespace

Kernel aggregate_mfbm_kernel(const FieldSpec& spec) {
    std::vector<Kernel> parts;
    for (const auto& p : spec.profiles) parts.push_back(std_mfbm_kernel(p));
    return additive_kernel("aggregate_mfbm", std::move(parts));
}

Kernel time_changed_mfbm_kernel(const FieldSpec& spec) {
    std::vector<Kernel> parts;
    for (std::size_t i = 0; i < spec.k; ++i) {
        if (!spec.variance_scales[i].depends_only_on(i)) {
            throw DomainError("time_changed_mfbm: C_i must depend on t_i only");
        }
        auto clock = std::make_shared<const Clock>(spec, i);
        const AlphaProfile profile = spec.profiles[i];
        parts.emplace_back("time_changed_std_mfbm", 1, [clock, profile](auto p, auto q) {
            return std_mfbm_cov_log_times(clock->log_phi(p[0]), clock->log_phi(q[0]), profile(p[0]),
                                          profile(q[0]));
        });
    }
    return additive_kernel("time_changed_mfbm", std::move(parts));
}

Kernel make_kernel(const FieldSpec& spec) {
    switch (spec.kernel) {
        case KernelModel::AggregateMfbm:
            return aggregate_mfbm_kernel(spec);
        case KernelModel::PoweredExponential: {
            std::vector<double> scales, alphas;
            const std::vector<double> origin(spec.k, spec.lower);
            for (std::size_t i = 0; i < spec.k; ++i) {
                scales.push_back(spec.variance_scales[i](origin));
                alphas.push_back(spec.profiles[i].alpha0());
            }
            return powered_exponential_kernel(std::move(scales), std::move(alphas));
        }
        case KernelModel::TimeChangedMfbm:
            break;
    }
    return time_changed_mfbm_kernel(spec);
}

// --- D4 --------------------------------------------------------------------------

std::vector<double> default_d4_radii() {
    std::vector<double> r;
    for (int j = 0; j <= 6; ++j) r.push_back(std::pow(10.0, -1.0 - 0.5 * j));
    return r;
}

D4Report verify_d4_expansion(const FieldSpec& spec, const Kernel& kernel, std::span<const double> t,
                             const D4Options& options) {
    if (t.size() != spec.k) throw DomainError("verify_d4_expansion: point dimension mismatch");
    D4Report rep;
    rep.point.assign(t.begin(), t.end());
    rep.radii = options.radii.empty() ? default_d4_radii() : options.radii;
    for (std::size_t j = 1; j < rep.radii.size(); ++j) {
        if (!(rep.radii[j] < rep.radii[j - 1]) || !(rep.radii[j] > 0.0)) {
            throw DomainError("verify_d4_expansion: radii must be positive and decreasing");
        }
    }

    const std::size_t k = spec.k;
    std::vector<std::vector<double>> candidates;
    for (std::size_t i = 0; i < k; ++i) {
        for (double sign : {1.0, -1.0}) {
            std::vector<double> d(k, 0.0);
            d[i] = sign;
            candidates.push_back(d);
        }
    }
    if (k > 1) candidates.emplace_back(k, 1.0 / std::sqrt(static_cast<double>(k)));

    std::vector<double> scales(k), exps(k);
    for (std::size_t i = 0; i < k; ++i) {
        scales[i] = spec.variance_scales[i](t);
        exps[i] = spec.profiles[i](t[i]);
    }

    const double largest = rep.radii.front();
    for (const auto& d : candidates) {
        bool inside = true;
        for (std::size_t i = 0; i < k; ++i) {
            const double x = t[i] + largest * d[i];
            if (x < spec.lower || x > spec.upper()) inside = false;
        }
        if (!inside) continue;
        std::vector<double> ratios;
        std::vector<double> p(k);
        for (double rho : rep.radii) {
            double denom = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                p[i] = t[i] + rho * d[i];
                const double si = std::abs(p[i] - t[i]);
                if (si > 0.0) denom += scales[i] * std::pow(si, exps[i]);
            }
            ratios.push_back((1.0 - kernel(t, p)) / denom);
        }
        rep.directions.push_back(d);
        rep.ratios.push_back(std::move(ratios));
    }
    if (rep.directions.empty()) {
        rep.message = "no probe direction stays inside the domain";
        return rep;
    }

    rep.max_error.assign(rep.radii.size(), 0.0);
    for (const auto& ratios : rep.ratios) {
        for (std::size_t j = 0; j < ratios.size(); ++j) {
            const double e = std::isfinite(ratios[j]) ? std::abs(ratios[j] - 1.0)
                                                      : std::numeric_limits<double>::infinity();
            rep.max_error[j] = std::max(rep.max_error[j], e);
        }
    }
    const std::size_t n = rep.max_error.size();
    const bool small = rep.max_error.back() <= options.tolerance;
    bool improving = true;
    for (std::size_t j = n >= 3 ? n - 2 : 1; j < n; ++j) {
        const double prev = std::max(rep.max_error[j - 1], options.error_floor);
        const double cur = std::max(rep.max_error[j], options.error_floor);
        if (cur > prev) improving = false;
    }
    rep.converged = small && improving;
    std::ostringstream msg;
    msg << "max |ratio - 1| at radius " << rep.radii.back() << " is " << rep.max_error.back();
    if (!small) msg << " (above tolerance " << options.tolerance << ")";
    if (!improving) msg << " (error not decreasing over the last radii)";
    rep.message = msg.str();
    return rep;
}

// --- matrices ------------------------------------------------------------------------

Eigen::MatrixXd factorize_with_jitter(const Eigen::MatrixXd& cov, double& jitter_used) {
    const Eigen::Index n = cov.rows();
    double jitter = 0.0;
    while (true) {
        Eigen::MatrixXd work = cov;
        work.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(work);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd L = llt.matrixL();
            if (L.allFinite()) {
                jitter_used = jitter;
                return L;
            }
        }
        if (jitter >= kMaxJitter * 0.999) break;
        jitter = jitter == 0.0 ? 1e-12 : jitter * 10.0;
    }
    const double min_eig = n == 0 ? 0.0
                                  : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly)
                                        .eigenvalues()
                                        .minCoeff();
    std::ostringstream msg;
    msg << "covariance factorization failed with jitter up to " << jitter << "; smallest eigenvalue " << min_eig;
    throw FactorizationError(msg.str(), jitter, min_eig);
}

CovMatrix build_cov_matrix(const std::vector<std::vector<double>>& points, const Kernel& kernel,
                           std::size_t threads) {
    const std::size_t n = points.size();
    if (n == 0) throw DomainError("build_cov_matrix: empty point list");
    for (const auto& p : points) {
        if (p.size() != kernel.dim()) throw DomainError("build_cov_matrix: point dimension mismatch");
    }
    {
        std::vector<const std::vector<double>*> sorted;
        for (const auto& p : points) sorted.push_back(&p);
        std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return *a < *b; });
        for (std::size_t j = 1; j < n; ++j) {
            if (*sorted[j] == *sorted[j - 1]) throw DomainError("build_cov_matrix: grid points must be distinct");
        }
    }
    CovMatrix out;
    out.cov.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    parallel_for_chunks(n, threads, [&](std::size_t i) {
        for (std::size_t j = 0; j <= i; ++j) {
            out.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kernel(points[i], points[j]);
        }
    });
    double max_off = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double v = out.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            out.cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
            max_off = std::max(max_off, v);
        }
    }
    out.grid_margin = n == 1 ? 1.0 : 1.0 - max_off;
    out.factor = factorize_with_jitter(out.cov, out.jitter);
    return out;
}

CovMatrix build_cov_matrix(const Grid& grid, const Kernel& kernel, std::size_t threads) {
    return build_cov_matrix(grid.points(), kernel, threads);
}

}  // namespace lsgrf
