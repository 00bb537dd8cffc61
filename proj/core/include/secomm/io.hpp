#pragma once

#include <filesystem>
#include <string>

namespace secomm {

/// Writes content to a sibling temp file and renames it into place, so a
/// crashed or re-run process never leaves a half-written output behind.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace secomm
