#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace qsamp {

/// Whole-file read; throws IoError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over the target, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Shortest round-trippable decimal form of a double ("%.17g").
std::string format_double(double value);

}  // namespace qsamp
