#pragma once

#include <iosfwd>
#include <string>

#include "mvic/matstat.hpp"

namespace mvic {

// Rectangular numeric CSV (comma-separated, one row per line). When
// `has_header` is set the first line is skipped.
Matrix load_matrix_csv(const std::string& path, bool has_header);

Matrix parse_matrix_csv(std::istream& in, bool has_header,
                        const std::string& origin);

// All floating-point output uses 17 significant digits so values round-trip.
std::string format_double(double v);

void write_matrix_csv(std::ostream& out, const Matrix& m);

}  // namespace mvic
