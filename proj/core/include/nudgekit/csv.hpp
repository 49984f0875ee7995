#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nudgekit::csv {

/// Shortest text that always round-trips: %.17g, with inf/nan spelled out.
std::string number(double v);

/// Comma-joined row terminated by '\n'.
void write_row(std::ostream& os, const std::vector<double>& values);
void write_header(std::ostream& os, const std::vector<std::string>& columns);

std::vector<std::string> split(std::string_view line, char sep = ',');

/// Strict parse of a whole field; throws ConfigError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

/// Reads a header line and checks it matches exactly.
void expect_header(std::istream& is, const std::vector<std::string>& columns);

}  // namespace nudgekit::csv
