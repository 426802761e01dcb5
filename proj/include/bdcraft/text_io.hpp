#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace bdcraft {

/// Whole-file read; throws DataError if the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

/// Writes via a sibling temporary and rename, so readers never observe a
/// partial file. Throws DataError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace bdcraft
