#pragma once

#include "lsgrf/covariance.hpp"
#include "lsgrf/grid.hpp"
#include "lsgrf/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace lsgrf {

// Exact sampler x = L z for a factorized covariance.
class GaussianSampler {
public:
    explicit GaussianSampler(Eigen::MatrixXd factor);
    explicit GaussianSampler(const CovMatrix& matrix) : GaussianSampler(matrix.factor) {}

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(factor_.rows()); }

    // `workspace` must hold size() doubles.
    void sample(PhiloxStream& rng, std::span<double> out, std::span<double> workspace) const;

private:
    Eigen::MatrixXd factor_;
};

// `count` independent paths; path j uses stream first_stream + j.
std::vector<SamplePath> cholesky_sample(const CovMatrix& matrix, std::shared_ptr<const Grid> grid,
                                        std::size_t count, std::uint64_t seed,
                                        std::uint64_t first_stream = 0, std::size_t threads = 1);

inline constexpr double kEmbeddingClipTolerance = 1e-8;

// fBm with Var B(t) = t^alpha on {0, step, ..., (n - 1) step} via circulant
// embedding of fractional Gaussian noise (Davies-Harte). Throws
// EmbeddingError when the embedding spectrum is negative beyond round-off.
class SpectralFbm {
public:
    SpectralFbm(double alpha, double step, std::size_t n);
    ~SpectralFbm();
    SpectralFbm(const SpectralFbm&) = delete;
    SpectralFbm& operator=(const SpectralFbm&) = delete;

    class Workspace {
    public:
        explicit Workspace(std::size_t m);
        ~Workspace();
        Workspace(const Workspace&) = delete;
        Workspace& operator=(const Workspace&) = delete;

    private:
        friend class SpectralFbm;
        void* in_;
        void* out_;
    };

    [[nodiscard]] Workspace workspace() const { return Workspace(embedding_size_); }
    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] double step() const noexcept { return step_; }
    [[nodiscard]] double min_eigenvalue() const noexcept { return min_eigenvalue_; }

    void sample(PhiloxStream& rng, std::span<double> out, Workspace& ws) const;

private:
    double alpha_;
    double step_;
    std::size_t n_;
    std::size_t embedding_size_;
    std::vector<double> sqrt_eigen_;
    double min_eigenvalue_ = 0.0;
    void* plan_ = nullptr;
};

SamplePath fbm_sample_spectral(double alpha, double step, std::size_t n, std::uint64_t seed,
                               std::uint64_t stream);

// fBm (alpha in (0, 2]) at arbitrary non-negative nodes. Uniform nodes that
// are integer multiples of their spacing take the spectral path; others fall
// back to Cholesky. alpha = 2 is the degenerate B(t) = t N.
class FbmNodeSampler {
public:
    FbmNodeSampler(double alpha, std::vector<double> nodes);

    struct Workspace {
        std::unique_ptr<SpectralFbm::Workspace> spectral;
        std::vector<double> buffer;
        std::vector<double> z;
    };

    [[nodiscard]] Workspace workspace() const;
    void sample(PhiloxStream& rng, std::span<double> out, Workspace& ws) const;
    [[nodiscard]] const std::vector<double>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] bool spectral() const noexcept { return static_cast<bool>(spectral_); }

private:
    double alpha_;
    std::vector<double> nodes_;
    std::shared_ptr<SpectralFbm> spectral_;
    std::vector<std::size_t> spectral_index_;
    std::unique_ptr<GaussianSampler> cholesky_;
    std::vector<std::size_t> nonzero_index_;
};

}  // namespace lsgrf
