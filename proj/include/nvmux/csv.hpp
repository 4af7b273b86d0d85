#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace nvmux::csv {

// Splits on commas and trims surrounding blanks. No quoting support.
std::vector<std::string> split(std::string_view line);

// Parses a finite double covering the whole field; false otherwise.
bool parse_double(std::string_view field, double& out);

// Next line that is neither blank nor a '#' comment. Tracks 1-based line numbers.
bool next_data_line(std::istream& is, std::string& line, std::size_t& line_no);

}  // namespace nvmux::csv
