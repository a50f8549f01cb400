#include "lsgrf/sampling.hpp"

#include "lsgrf/error.hpp"
#include "lsgrf/parallel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

namespace lsgrf {

// --- Cholesky -------------------------------------------------------------------

GaussianSampler::GaussianSampler(Eigen::MatrixXd factor) : factor_(std::move(factor)) {}

void GaussianSampler::sample(PhiloxStream& rng, std::span<double> out, std::span<double> workspace) const {
    const Eigen::Index n = factor_.rows();
    Eigen::Map<Eigen::VectorXd> z(workspace.data(), n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
    Eigen::Map<Eigen::VectorXd> x(out.data(), n);
    x.noalias() = factor_.triangularView<Eigen::Lower>() * z;
}

std::vector<SamplePath> cholesky_sample(const CovMatrix& matrix, std::shared_ptr<const Grid> grid,
                                        std::size_t count, std::uint64_t seed, std::uint64_t first_stream,
                                        std::size_t threads) {
    const GaussianSampler sampler(matrix);
    if (grid && grid->size() != sampler.size()) throw DomainError("cholesky_sample: grid size does not match matrix");
    std::vector<SamplePath> paths(count);
    parallel_for_chunks(count, threads, [&](std::size_t j) {
        std::vector<double> z(sampler.size());
        auto& p = paths[j];
        p.grid = grid;
        p.seed = seed;
        p.stream = first_stream + j;
        p.values.resize(sampler.size());
        PhiloxStream rng(seed, p.stream);
        sampler.sample(rng, p.values, z);
    });
    return paths;
}

// --- circulant embedding -------------------------------------------------------------------

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

double fgn_autocov(double alpha, std::size_t lag) {
    const double j = static_cast<double>(lag);
    return 0.5 * (std::pow(j + 1.0, alpha) - 2.0 * std::pow(j, alpha) + std::pow(std::abs(j - 1.0), alpha));
}

}  // namespace

SpectralFbm::Workspace::Workspace(std::size_t m)
    : in_(fftw_malloc(sizeof(fftw_complex) * m)), out_(fftw_malloc(sizeof(fftw_complex) * m)) {
    if (!in_ || !out_) throw std::bad_alloc();
}

SpectralFbm::Workspace::~Workspace() {
    fftw_free(in_);
    fftw_free(out_);
}

SpectralFbm::SpectralFbm(double alpha, double step, std::size_t n) : alpha_(alpha), step_(step), n_(n) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("spectral fBm: alpha must lie in (0, 2)");
    if (!(step > 0.0)) throw DomainError("spectral fBm: step must be positive");
    if (n < 2) throw DomainError("spectral fBm: need at least two grid points");
    const std::size_t m = n - 1;
    embedding_size_ = 2 * m;
    const std::size_t M = embedding_size_;

    Workspace ws(M);
    auto* in = static_cast<fftw_complex*>(ws.in_);
    auto* out = static_cast<fftw_complex*>(ws.out_);
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_1d(static_cast<int>(M), in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    if (!plan_) throw std::runtime_error("FFTW planning failed");
    for (std::size_t j = 0; j < M; ++j) {
        const std::size_t lag = j <= m ? j : M - j;
        in[j][0] = fgn_autocov(alpha, lag);
        in[j][1] = 0.0;
    }
    fftw_execute(static_cast<fftw_plan>(plan_));
    double max_eig = 0.0;
    min_eigenvalue_ = out[0][0];
    for (std::size_t j = 0; j < M; ++j) {
        max_eig = std::max(max_eig, out[j][0]);
        min_eigenvalue_ = std::min(min_eigenvalue_, out[j][0]);
    }
    if (min_eigenvalue_ < -kEmbeddingClipTolerance * max_eig) {
        std::ostringstream msg;
        msg << "circulant embedding has eigenvalue " << min_eigenvalue_ << " (max " << max_eig << ")";
        fftw_destroy_plan(static_cast<fftw_plan>(plan_));
        throw EmbeddingError(msg.str(), min_eigenvalue_);
    }
    sqrt_eigen_.resize(M);
    for (std::size_t j = 0; j < M; ++j) {
        sqrt_eigen_[j] = std::sqrt(std::max(out[j][0], 0.0) / static_cast<double>(M));
    }
}

SpectralFbm::~SpectralFbm() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
}

void SpectralFbm::sample(PhiloxStream& rng, std::span<double> path, Workspace& ws) const {
    const std::size_t M = embedding_size_;
    auto* in = static_cast<fftw_complex*>(ws.in_);
    auto* out = static_cast<fftw_complex*>(ws.out_);
    for (std::size_t j = 0; j < M; ++j) {
        in[j][0] = sqrt_eigen_[j] * rng.normal();
        in[j][1] = sqrt_eigen_[j] * rng.normal();
    }
    fftw_execute_dft(static_cast<fftw_plan>(plan_), in, out);
    const double scale = std::pow(step_, alpha_ / 2.0);
    double acc = 0.0;
    path[0] = 0.0;
    for (std::size_t j = 1; j < n_; ++j) {
        acc += out[j - 1][0];
        path[j] = scale * acc;
    }
}

SamplePath fbm_sample_spectral(double alpha, double step, std::size_t n, std::uint64_t seed, std::uint64_t stream) {
    SpectralFbm fbm(alpha, step, n);
    auto ws = fbm.workspace();
    std::vector<double> nodes(n);
    for (std::size_t j = 0; j < n; ++j) nodes[j] = step * static_cast<double>(j);
    SamplePath p;
    p.grid = std::make_shared<const Grid>(std::vector<std::vector<double>>{nodes});
    p.values.resize(n);
    p.seed = seed;
    p.stream = stream;
    PhiloxStream rng(seed, stream);
    fbm.sample(rng, p.values, ws);
    return p;
}

// --- nodes ---------------------------------------------------------------------------------

FbmNodeSampler::FbmNodeSampler(double alpha, std::vector<double> nodes) : alpha_(alpha), nodes_(std::move(nodes)) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("fBm sampler: alpha must lie in (0, 2]");
    if (nodes_.empty()) throw DomainError("fBm sampler: no nodes");
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
        if (!(nodes_[j] >= 0.0)) throw DomainError("fBm sampler: nodes must be non-negative");
        if (j > 0 && !(nodes_[j] > nodes_[j - 1])) throw DomainError("fBm sampler: nodes must increase");
    }
    if (alpha == 2.0) return;

    if (nodes_.size() >= 2) {
        const double h = nodes_[1] - nodes_[0];
        const double first = nodes_[0] / h;
        bool uniform = std::abs(first - std::round(first)) < 1e-9;
        for (std::size_t j = 1; uniform && j < nodes_.size(); ++j) {
            const double pos = nodes_[j] / h;
            uniform = std::abs(pos - std::round(pos)) < 1e-9 * std::max(1.0, pos) &&
                      std::abs((nodes_[j] - nodes_[j - 1]) - h) < 1e-9 * h;
        }
        if (uniform) {
            const auto offset = static_cast<std::size_t>(std::llround(first));
            const std::size_t n = offset + nodes_.size();
            try {
                spectral_ = std::make_shared<SpectralFbm>(alpha, h, n);
                for (std::size_t j = 0; j < nodes_.size(); ++j) spectral_index_.push_back(offset + j);
                return;
            } catch (const EmbeddingError&) {
                spectral_.reset();
            }
        }
    }
    std::vector<std::vector<double>> pts;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
        if (nodes_[j] > 0.0) {
            nonzero_index_.push_back(j);
            pts.push_back({nodes_[j]});
        }
    }
    if (!pts.empty()) cholesky_ = std::make_unique<GaussianSampler>(build_cov_matrix(pts, fbm_kernel(alpha)));
}

FbmNodeSampler::Workspace FbmNodeSampler::workspace() const {
    Workspace ws;
    if (spectral_) {
        ws.spectral = std::make_unique<SpectralFbm::Workspace>(2 * (spectral_->size() - 1));
        ws.buffer.resize(spectral_->size());
    } else if (cholesky_) {
        ws.buffer.resize(cholesky_->size());
        ws.z.resize(cholesky_->size());
    }
    return ws;
}

void FbmNodeSampler::sample(PhiloxStream& rng, std::span<double> out, Workspace& ws) const {
    if (alpha_ == 2.0) {
        const double n = rng.normal();
        for (std::size_t j = 0; j < nodes_.size(); ++j) out[j] = nodes_[j] * n;
        return;
    }
    if (spectral_) {
        spectral_->sample(rng, ws.buffer, *ws.spectral);
        for (std::size_t j = 0; j < nodes_.size(); ++j) out[j] = ws.buffer[spectral_index_[j]];
        return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    if (!cholesky_) return;
    cholesky_->sample(rng, ws.buffer, ws.z);
    for (std::size_t j = 0; j < nonzero_index_.size(); ++j) out[nonzero_index_[j]] = ws.buffer[j];
}

}  // namespace lsgrf
