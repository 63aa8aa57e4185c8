#pragma once
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace ssep {

// Flat key-value config with named tables:
//   top = 1
//   [table]
//   key = value        # comment
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text);

  bool has(const std::string& table, const std::string& key) const;
  std::string require(const std::string& table, const std::string& key) const;
  std::string get(const std::string& table, const std::string& key,
                  const std::string& fallback) const;
  double get_num(const std::string& table, const std::string& key, double fallback) const;
  double require_num(const std::string& table, const std::string& key) const;
  long get_int(const std::string& table, const std::string& key, long fallback) const;
  std::vector<double> get_list(const std::string& table, const std::string& key) const;

  std::string canonical_text() const;  // sorted dump used for hashing

 private:
  std::map<std::string, std::map<std::string, std::string>> tables_;
};

std::uint64_t fnv1a64(const std::string& s);

// CSV emitter with fixed numeric formatting (deterministic bytes)
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& header_comment,
            const std::string& columns);
  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& fields);
  static std::string num(double v);

 private:
  std::ofstream out_;
};

}  // namespace ssep
