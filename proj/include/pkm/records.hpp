#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pkm {

/// One machine-readable result line: space-separated key=value fields in
/// insertion order. Values never contain spaces, so the format splits on
/// whitespace and parses with no quoting rules.
class Record {
 public:
  Record& set(const std::string& key, const std::string& value) {
    if (key.find_first_of(" =\n") != std::string::npos ||
        value.find_first_of(" \n") != std::string::npos)
      throw std::invalid_argument("Record: keys and values must be space-free");
    fields_.emplace_back(key, value);
    return *this;
  }

  Record& set(const std::string& key, int64_t value) {
    return set(key, std::to_string(value));
  }

  Record& set(const std::string& key, int value) {
    return set(key, std::to_string(value));
  }

  Record& set(const std::string& key, bool value) {
    return set(key, std::string(value ? "1" : "0"));
  }

  Record& set(const std::string& key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return set(key, std::string(buf));
  }

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : fields_)
      if (k == key) return &v;
    return nullptr;
  }

  double number(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw std::invalid_argument("Record: missing key '" + key + "'");
    return std::stod(*v);
  }

  std::string line() const {
    std::ostringstream os;
    for (size_t i = 0; i < fields_.size(); ++i) {
      if (i) os << ' ';
      os << fields_[i].first << '=' << fields_[i].second;
    }
    return os.str();
  }

  static Record parse(const std::string& line) {
    Record rec;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) {
      const size_t eq = tok.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("Record: field without '=': " + tok);
      rec.fields_.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
    return rec;
  }

  const std::vector<std::pair<std::string, std::string>>& fields() const {
    return fields_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

inline void append_record(const std::string& path, const Record& rec) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to records file: " + path);
  out << rec.line() << '\n';
}

inline std::vector<Record> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open records file: " + path);
  std::vector<Record> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(Record::parse(line));
  }
  return out;
}

/// The plot-data extractor: selects records matching every filter (key=value
/// equality) and emits CSV with the requested columns. Missing keys render
/// as empty cells.
inline std::string records_to_csv(const std::vector<Record>& records,
                                  const std::vector<std::string>& keys,
                                  const std::vector<std::pair<std::string, std::string>>&
                                      filters = {}) {
  std::ostringstream os;
  for (size_t i = 0; i < keys.size(); ++i) os << (i ? "," : "") << keys[i];
  os << '\n';
  for (const auto& rec : records) {
    bool keep = true;
    for (const auto& [k, v] : filters) {
      const std::string* got = rec.find(k);
      if (!got || *got != v) {
        keep = false;
        break;
      }
    }
    if (!keep) continue;
    for (size_t i = 0; i < keys.size(); ++i) {
      const std::string* v = rec.find(keys[i]);
      os << (i ? "," : "") << (v ? *v : "");
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace pkm
