#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lsgrf {

// Worker count used when callers pass 0.
inline std::size_t default_threads() {
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Runs body(chunk_index) for chunk_index in [0, chunks) on up to `threads`
// workers. Chunk boundaries come from the caller and do not depend on the
// worker count.
template <class Body>
void parallel_for_chunks(std::size_t chunks, std::size_t threads, Body&& body) {
    if (threads == 0) threads = default_threads();
    threads = std::min(threads, chunks);
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) body(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            try {
                body(c);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = chunks;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            compensation_ += (sum_ - t) + x;
        } else {
            compensation_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    void add(const CompensatedSum& other) noexcept {
        add(other.sum_);
        add(other.compensation_);
    }
    [[nodiscard]] double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

// Sample mean / standard error accumulator built on compensated sums.
class MeanAccumulator {
public:
    void add(double x) noexcept {
        sum_.add(x);
        sum_sq_.add(x * x);
        ++count_;
    }
    void merge(const MeanAccumulator& other) noexcept {
        sum_.add(other.sum_);
        sum_sq_.add(other.sum_sq_);
        count_ += other.count_;
    }
    [[nodiscard]] std::size_t count() const noexcept { return count_; }
    [[nodiscard]] double mean() const noexcept {
        return count_ == 0 ? 0.0 : sum_.value() / static_cast<double>(count_);
    }
    [[nodiscard]] double variance() const noexcept {
        if (count_ < 2) return 0.0;
        const double n = static_cast<double>(count_);
        const double m = mean();
        return std::max(0.0, (sum_sq_.value() - n * m * m) / (n - 1.0));
    }
    [[nodiscard]] double standard_error() const noexcept {
        return count_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(count_));
    }

private:
    CompensatedSum sum_;
    CompensatedSum sum_sq_;
    std::size_t count_ = 0;
};

inline constexpr std::size_t kReplicationsPerChunk = 256;

inline std::size_t chunk_count(std::size_t reps, std::size_t per_chunk = kReplicationsPerChunk) {
    return (reps + per_chunk - 1) / per_chunk;
}

}  // namespace lsgrf
