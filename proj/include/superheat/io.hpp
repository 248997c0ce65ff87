#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace superheat::io {

// Shortest decimal string that reads back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> comments;  // '#' lines without the marker
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
std::string render_csv(const CsvTable& table);

}  // namespace superheat::io
