#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace supercorr {

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);
void write_text_file(const std::string& path, const std::string& text);
void ensure_directory(const std::string& path);

// Plain CSV with a fixed header; numbers use the shortest round-trip form so
// identical inputs give identical bytes.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(const std::vector<std::string>& cells);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string csv_number(double x);
std::string csv_number(long x);
std::string csv_number(int x);

}  // namespace supercorr
