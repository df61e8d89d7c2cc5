#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace calibre {

/// Whole-file read. Throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Strict decimal parse of the whole token (surrounding blanks allowed).
std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_integer(std::string_view token);

}  // namespace calibre
