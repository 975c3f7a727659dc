#include "mvic/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace mvic {

namespace {

std::vector<double> parse_row(const std::string& line,
                              const std::string& origin, std::size_t lineno) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) comma = line.size();
    const std::string field = line.substr(pos, comma - pos);
    try {
      std::size_t consumed = 0;
      const double v = std::stod(field, &consumed);
      // Allow trailing whitespace only.
      for (std::size_t i = consumed; i < field.size(); ++i) {
        if (!std::isspace(static_cast<unsigned char>(field[i]))) {
          throw std::invalid_argument(field);
        }
      }
      values.push_back(v);
    } catch (const std::exception&) {
      std::ostringstream msg;
      msg << origin << ":" << lineno << ": cannot parse '" << field
          << "' as a number";
      throw ValidationError(msg.str());
    }
    pos = comma + 1;
    if (comma == line.size()) break;
  }
  return values;
}

}  // namespace

Matrix parse_matrix_csv(std::istream& in, bool has_header,
                        const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (has_header && lineno == 1) continue;
    if (line.empty()) continue;
    rows.push_back(parse_row(line, origin, lineno));
    if (rows.size() > 1 && rows.back().size() != rows.front().size()) {
      std::ostringstream msg;
      msg << origin << ":" << lineno << ": row has " << rows.back().size()
          << " fields, expected " << rows.front().size();
      throw ValidationError(msg.str());
    }
  }
  if (rows.empty()) {
    throw ValidationError(origin + ": no data rows");
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  if (!m.allFinite()) {
    throw ValidationError(origin + ": non-finite entries");
  }
  return m;
}

Matrix load_matrix_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open file: " + path);
  }
  return parse_matrix_csv(in, has_header, path);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace mvic
