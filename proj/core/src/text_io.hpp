#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mgmc::detail {

// Reads all lines of a text file, transparently gunzipping "*.gz" paths.
// Throws ParseError if the file cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Formats a double so that reading it back reproduces the exact bits.
std::string format_double(double v);

}  // namespace mgmc::detail
