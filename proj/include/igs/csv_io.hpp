#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "igs/matrix.hpp"

namespace igs::io {

/// Reads a headerless CSV of decimal values into a dense matrix.
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Writes one row per line, values in shortest round-trip form.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// Round-trip decimal form of a double ("%.17g").
std::string format_double(double v);

std::vector<std::string> split_csv_line(const std::string& line);

/// Writes `content` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

}  // namespace igs::io
