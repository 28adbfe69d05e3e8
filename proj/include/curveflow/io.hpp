#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace curveflow {

/// Shortest-safe text form of a double: 17 significant digits, so parsing it
/// back yields the same bits.
std::string format_double(double v);

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace curveflow
