#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace selrad::cli {

/// Fixed 17-significant-digit rendering used in every CSV cell.
std::string format_double(double x);

/// Accumulates a CSV table in memory; cells are written verbatim (no quoting needed for
/// the numeric and identifier content produced here).
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& cell(double x);
  CsvTable& cell(long long x);
  CsvTable& cell(unsigned long long x);
  CsvTable& cell(std::string_view s);
  void end_row();

  std::string str() const;

 private:
  std::size_t columns_;
  std::size_t in_row_ = 0;
  std::string text_;
};

/// Writes `content` to dir/name, creating dir if needed. Throws std::runtime_error.
std::string write_file(const std::string& dir, const std::string& name, const std::string& content);

std::string dump_json(const nlohmann::ordered_json& j);

}  // namespace selrad::cli
