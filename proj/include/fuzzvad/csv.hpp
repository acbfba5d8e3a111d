#pragma once

// Minimal comma-separated reader/writer. Fields may be double-quoted; quotes
// inside a quoted field are doubled.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace fuzzvad::csv {

using Row = std::vector<std::string>;

/// Splits one line. Throws IoError on an unterminated quote.
Row split_line(const std::string& line);

std::string escape(const std::string& field);
void write_row(std::ostream& out, const Row& row);

/// Parses a decimal number, rejecting trailing garbage. Throws IoError.
double parse_double(const std::string& field, const std::string& context);

/// Shortest decimal text that round-trips the value.
std::string format_double(double v);

}  // namespace fuzzvad::csv
