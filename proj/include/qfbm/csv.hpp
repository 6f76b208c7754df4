#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

namespace qfbm {

/// Shortest decimal that parses back to the same double.
std::string format_real(double value);

/// Writes through a temporary file in the target directory and renames it into place on
/// success, so a failed writer never leaves a partial file behind.
void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ofstream&)>& writer,
                      std::ios::openmode mode = std::ios::out);

}  // namespace qfbm
