#include "igs/csv_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "igs/errors.hpp"

namespace igs::io {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t lead = cell.find_first_not_of(' ');
    cells.push_back(lead == std::string::npos ? std::string{} : cell.substr(lead));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open matrix file " + path.string());
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (rows == 0) cols = cells.size();
    if (cells.size() != cols)
      throw IngestionError(path.string() + ": row " + std::to_string(rows + 1) + " has " +
                           std::to_string(cells.size()) + " values, expected " +
                           std::to_string(cols));
    for (const auto& c : cells) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size() || errno == ERANGE)
        throw IngestionError(path.string() + ": bad value '" + c + "' on row " +
                             std::to_string(rows + 1));
      values.push_back(v);
    }
    ++rows;
  }
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  if (!m.all_finite()) throw IngestionError(path.string() + ": non-finite value");
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::string out;
  out.reserve(m.size() * 12);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  write_text(path, out);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace igs::io
