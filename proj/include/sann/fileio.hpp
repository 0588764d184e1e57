#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace sann {

/// Writes to `<path>.tmp` and renames over `path`, so readers never see a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Shortest-form-independent decimal with the given significant digits.
std::string format_real(double v, int significant_digits);

/// Strict decimal parse of a whole token; throws ParseError.
double parse_real(std::string_view token);

}  // namespace sann
