#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bbmwave::csv {

/// 17 significant digits, '.' decimal point; NaN becomes an empty cell.
std::string format_real(double v);
std::string format_real(const std::optional<double>& v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::out_of_range if absent.
  std::size_t column(const std::string& name) const;
};

/// Comma-separated, LF line endings, header first.
std::string to_string(const Table& table);
void write(const std::filesystem::path& path, const Table& table);

/// Reads a file produced by write(). Cells never contain commas or quotes.
Table read(const std::filesystem::path& path);

/// Empty cell -> nothing; otherwise a parsed double (throws on garbage).
std::optional<double> parse_real(const std::string& cell);

}  // namespace bbmwave::csv
