#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace pfode::csv {

/// Shortest round-trip text for a double with 17 significant digits.
std::string format(double v);

void write_row(std::ostream& os, const std::vector<std::string>& cells);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;
};

Table read(std::istream& is);
Table read_file(const std::filesystem::path& path);

/// Writes through a temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& body);

}  // namespace pfode::csv
