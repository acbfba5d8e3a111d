#include "fuzzvad/csv.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "fuzzvad/error.hpp"

namespace fuzzvad::csv {

Row split_line(const std::string& line) {
    Row row;
    std::string field;
    bool quoted = false;
    std::size_t end = line.size();
    if (end > 0 && line[end - 1] == '\r') --end;
    for (std::size_t i = 0; i < end; ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < end && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted) throw IoError("unterminated quoted field");
    row.push_back(std::move(field));
    return row;
}

std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

void write_row(std::ostream& out, const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << escape(row[i]);
    }
    out << '\n';
}

double parse_double(const std::string& field, const std::string& context) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last) {
        throw IoError(fmt::format("{}: '{}' is not a number", context, field));
    }
    return v;
}

std::string format_double(double v) { return fmt::format("{}", v); }

}  // namespace fuzzvad::csv
