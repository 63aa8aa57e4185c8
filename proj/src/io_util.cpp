#include "ssep/io_util.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ssep {

namespace {
std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

Config Config::parse_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, table;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config: bad table header at line " + std::to_string(lineno));
      table = trim(line.substr(1, line.size() - 2));
      cfg.tables_[table];
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected key = value at line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (!val.empty() && val.front() == '"' && val.back() == '"' && val.size() >= 2)
      val = val.substr(1, val.size() - 2);
    cfg.tables_[table][key] = val;
  }
  return cfg;
}

bool Config::has(const std::string& table, const std::string& key) const {
  auto t = tables_.find(table);
  return t != tables_.end() && t->second.count(key) > 0;
}

std::string Config::require(const std::string& table, const std::string& key) const {
  if (!has(table, key))
    throw std::runtime_error("config: missing " + (table.empty() ? key : table + "." + key));
  return tables_.at(table).at(key);
}

std::string Config::get(const std::string& table, const std::string& key,
                        const std::string& fallback) const {
  return has(table, key) ? tables_.at(table).at(key) : fallback;
}

double Config::get_num(const std::string& table, const std::string& key,
                       double fallback) const {
  return has(table, key) ? std::stod(tables_.at(table).at(key)) : fallback;
}

double Config::require_num(const std::string& table, const std::string& key) const {
  return std::stod(require(table, key));
}

long Config::get_int(const std::string& table, const std::string& key, long fallback) const {
  return has(table, key) ? std::stol(tables_.at(table).at(key)) : fallback;
}

std::vector<double> Config::get_list(const std::string& table, const std::string& key) const {
  std::vector<double> out;
  if (!has(table, key)) return out;
  std::istringstream in(tables_.at(table).at(key));
  double v;
  while (in >> v) out.push_back(v);
  return out;
}

std::string Config::canonical_text() const {
  std::ostringstream out;
  for (const auto& [table, kv] : tables_) {
    out << '[' << table << "]\n";
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  }
  return out.str();
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& header_comment,
                     const std::string& columns)
    : out_(path) {
  if (!out_) throw std::runtime_error("csv: cannot open " + path);
  if (!header_comment.empty()) out_ << "# " << header_comment << "\n";
  out_ << columns << "\n";
}

std::string CsvWriter::num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void CsvWriter::row(const std::vector<double>& values) {
  for (size_t i = 0; i < values.size(); ++i)
    out_ << (i ? "," : "") << num(values[i]);
  out_ << "\n";
}

void CsvWriter::row_mixed(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
  out_ << "\n";
}

}  // namespace ssep
