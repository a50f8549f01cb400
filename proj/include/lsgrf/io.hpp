#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace lsgrf {

// Writes `bytes` to a temporary sibling and renames it over `target`, so a
// failed run never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& target, std::string_view bytes);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double x);

std::string read_file(const std::filesystem::path& path);

}  // namespace lsgrf
