#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lsgrf {

// Rectangular tensor grid. Points are enumerated row-major with the first
// axis slowest.
class Grid {
public:
    explicit Grid(std::vector<std::vector<double>> axes);

    // n uniform nodes lower, lower + step, ..., on every one of k axes.
    static Grid uniform(std::size_t k, double lower, double upper, std::size_t intervals);

    [[nodiscard]] std::size_t dim() const noexcept { return axes_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] const std::vector<double>& axis(std::size_t a) const { return axes_.at(a); }
    [[nodiscard]] const std::vector<std::vector<double>>& axes() const noexcept { return axes_; }
    [[nodiscard]] std::vector<std::size_t> counts() const;

    [[nodiscard]] std::vector<double> point(std::size_t index) const;
    void point(std::size_t index, std::span<double> out) const;
    [[nodiscard]] std::vector<std::vector<double>> points() const;

    // Index of the point with the given per-axis node indices.
    [[nodiscard]] std::size_t flat_index(std::span<const std::size_t> node) const;

private:
    std::vector<std::vector<double>> axes_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 1;
};

// One realization of a Gaussian field on a grid.
struct SamplePath {
    std::shared_ptr<const Grid> grid;
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

std::string sample_csv(const SamplePath& path);
void write_sample_csv(const SamplePath& path, const std::filesystem::path& file);

// Binary layout, all little-endian: u64 k, u64 count[k], u64 seed, f64 values[].
std::string sample_binary(const SamplePath& path);
void write_sample_binary(const SamplePath& path, const std::filesystem::path& file);

struct BinarySample {
    std::vector<std::uint64_t> counts;
    std::uint64_t seed = 0;
    std::vector<double> values;
};
BinarySample read_sample_binary(const std::filesystem::path& file);

}  // namespace lsgrf
