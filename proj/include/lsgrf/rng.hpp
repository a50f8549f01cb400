#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace lsgrf {

// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

// Counter-based generator. The 64-bit seed is the Philox key and the 64-bit
// stream id occupies the upper half of the counter, so every (seed, stream)
// pair is an independent sequence of 2^64 blocks with no shared state.
class PhiloxStream {
public:
    using result_type = std::uint32_t;

    static constexpr std::string_view kAlgorithm = "philox4x32-10/box-muller";

    PhiloxStream(std::uint64_t seed, std::uint64_t stream) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    // Uniform on (0, 1) with 53 random bits; never returns 0 or 1.
    double uniform() noexcept;
    // Uniform integer in [0, n) by rejection, n > 0.
    std::uint64_t below(std::uint64_t n) noexcept;
    // Standard normal via Box-Muller; pairs are cached.
    double normal() noexcept;

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    unsigned position_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

// Stream id layout: (purpose << 48) | replication.
inline constexpr std::uint64_t stream_id(std::uint64_t purpose, std::uint64_t replication) noexcept {
    return (purpose << 48) | replication;
}

}  // namespace lsgrf
