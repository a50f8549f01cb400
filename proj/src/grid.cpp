#include "lsgrf/grid.hpp"

#include "lsgrf/error.hpp"
#include "lsgrf/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lsgrf {

Grid::Grid(std::vector<std::vector<double>> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw DomainError("grid needs at least one axis");
    for (const auto& ax : axes_) {
        if (ax.empty()) throw DomainError("grid axis has no nodes");
        for (std::size_t j = 0; j < ax.size(); ++j) {
            if (!std::isfinite(ax[j])) throw DomainError("grid node is not finite");
            if (j > 0 && !(ax[j] > ax[j - 1])) throw DomainError("grid nodes must be strictly increasing");
        }
    }
    strides_.assign(axes_.size(), 1);
    for (std::size_t a = axes_.size(); a-- > 1;) strides_[a - 1] = strides_[a] * axes_[a].size();
    size_ = strides_[0] * axes_[0].size();
}

Grid Grid::uniform(std::size_t k, double lower, double upper, std::size_t intervals) {
    if (intervals == 0) throw DomainError("uniform grid needs at least one interval");
    std::vector<double> nodes(intervals + 1);
    const double step = (upper - lower) / static_cast<double>(intervals);
    for (std::size_t j = 0; j <= intervals; ++j) nodes[j] = lower + step * static_cast<double>(j);
    nodes.back() = upper;
    return Grid(std::vector<std::vector<double>>(k, nodes));
}

std::vector<std::size_t> Grid::counts() const {
    std::vector<std::size_t> c;
    c.reserve(axes_.size());
    for (const auto& ax : axes_) c.push_back(ax.size());
    return c;
}

void Grid::point(std::size_t index, std::span<double> out) const {
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        out[a] = axes_[a][(index / strides_[a]) % axes_[a].size()];
    }
}

std::vector<double> Grid::point(std::size_t index) const {
    std::vector<double> p(axes_.size());
    point(index, p);
    return p;
}

std::vector<std::vector<double>> Grid::points() const {
    std::vector<std::vector<double>> pts;
    pts.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) pts.push_back(point(i));
    return pts;
}

std::size_t Grid::flat_index(std::span<const std::size_t> node) const {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < axes_.size(); ++a) idx += node[a] * strides_[a];
    return idx;
}

// --- export -------------------------------------------------------------------

std::string sample_csv(const SamplePath& path) {
    const Grid& g = *path.grid;
    std::ostringstream out;
    for (std::size_t a = 0; a < g.dim(); ++a) out << 't' << (a + 1) << ',';
    out << "value\n";
    std::vector<double> p(g.dim());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.point(i, p);
        for (double x : p) out << format_double(x) << ',';
        out << format_double(path.values[i]) << '\n';
    }
    return out.str();
}

void write_sample_csv(const SamplePath& path, const std::filesystem::path& file) {
    write_file_atomic(file, sample_csv(path));
}

namespace {

void put_u64(std::string& buf, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xFFU));
}

std::uint64_t get_u64(const std::string& buf, std::size_t& pos) {
    if (pos + 8 > buf.size()) throw std::runtime_error("truncated sample file");
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + b])) << (8 * b);
    pos += 8;
    return v;
}

}  // namespace

std::string sample_binary(const SamplePath& path) {
    const Grid& g = *path.grid;
    std::string buf;
    buf.reserve(8 * (2 + g.dim() + path.values.size()));
    put_u64(buf, g.dim());
    for (auto c : g.counts()) put_u64(buf, c);
    put_u64(buf, path.seed);
    for (double v : path.values) put_u64(buf, std::bit_cast<std::uint64_t>(v));
    return buf;
}

void write_sample_binary(const SamplePath& path, const std::filesystem::path& file) {
    write_file_atomic(file, sample_binary(path));
}

BinarySample read_sample_binary(const std::filesystem::path& file) {
    const std::string buf = read_file(file);
    std::size_t pos = 0;
    BinarySample s;
    const std::uint64_t k = get_u64(buf, pos);
    std::uint64_t total = 1;
    for (std::uint64_t a = 0; a < k; ++a) {
        s.counts.push_back(get_u64(buf, pos));
        total *= s.counts.back();
    }
    s.seed = get_u64(buf, pos);
    s.values.reserve(total);
    for (std::uint64_t i = 0; i < total; ++i) s.values.push_back(std::bit_cast<double>(get_u64(buf, pos)));
    if (pos != buf.size()) throw std::runtime_error("trailing bytes in sample file");
    return s;
}

}  // namespace lsgrf
