#include "selrad_cli/output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace selrad::cli {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (k) text_ += ',';
    text_ += header[k];
  }
  text_ += '\n';
}

CsvTable& CsvTable::cell(std::string_view s) {
  if (in_row_) text_ += ',';
  text_ += s;
  ++in_row_;
  return *this;
}

CsvTable& CsvTable::cell(double x) { return cell(std::string_view(format_double(x))); }
CsvTable& CsvTable::cell(long long x) { return cell(std::string_view(std::to_string(x))); }
CsvTable& CsvTable::cell(unsigned long long x) { return cell(std::string_view(std::to_string(x))); }

void CsvTable::end_row() {
  if (in_row_ != columns_) throw std::logic_error("CsvTable: row has wrong number of cells");
  text_ += '\n';
  in_row_ = 0;
}

std::string CsvTable::str() const { return text_; }

std::string write_file(const std::string& dir, const std::string& name, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path path = fs::path(dir) / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
  return path.string();
}

std::string dump_json(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace selrad::cli
