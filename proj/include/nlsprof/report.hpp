#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nlsprof/error.hpp"
#include "nlsprof/trajectory.hpp"

namespace nlsprof {

// Plain-text report: "[section]" headers followed by "key: value" lines, order preserved.
struct ReportSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;

  ReportSection& add(const std::string& k, const std::string& v) {
    entries.emplace_back(k, v);
    return *this;
  }
  ReportSection& add(const std::string& k, double v) { return add(k, format_number(v)); }
  ReportSection& add(const std::string& k, int v) { return add(k, std::to_string(v)); }
  ReportSection& add(const std::string& k, long v) { return add(k, std::to_string(v)); }
  ReportSection& add(const std::string& k, bool v) { return add(k, std::string(v ? "true" : "false")); }
  ReportSection& add(const std::string& k, const char* v) { return add(k, std::string(v)); }

  const std::string* find(const std::string& k) const {
    for (const auto& e : entries)
      if (e.first == k) return &e.second;
    return nullptr;
  }
  std::string get(const std::string& k) const {
    const std::string* v = find(k);
    require(v != nullptr, ErrorCode::IoError, "report key '" + k + "' missing in section [" + name + "]");
    return *v;
  }
  bool operator==(const ReportSection&) const = default;
};

struct Report {
  std::vector<ReportSection> sections;

  ReportSection& section(const std::string& name) {
    for (auto& s : sections)
      if (s.name == name) return s;
    sections.push_back({name, {}});
    return sections.back();
  }
  const ReportSection* find(const std::string& name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }
  std::string get(const std::string& sec, const std::string& key) const {
    const ReportSection* s = find(sec);
    require(s != nullptr, ErrorCode::IoError, "report section [" + sec + "] missing");
    return s->get(key);
  }
  void append(const Report& o) {
    for (const auto& s : o.sections) sections.push_back(s);
  }
  bool operator==(const Report&) const = default;

  void write(std::ostream& os) const {
    bool first = true;
    for (const auto& s : sections) {
      if (!first) os << '\n';
      first = false;
      os << '[' << s.name << "]\n";
      for (const auto& [k, v] : s.entries) os << k << ": " << v << '\n';
    }
  }
  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }
  void write(const std::string& path) const {
    std::ofstream os(path);
    require(bool(os), ErrorCode::IoError, "cannot write " + path);
    write(os);
  }

  static Report read(std::istream& is) {
    Report r;
    ReportSection* cur = nullptr;
    std::string line;
    while (std::getline(is, line)) {
      std::string t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '[' && t.back() == ']') {
        r.sections.push_back({t.substr(1, t.size() - 2), {}});
        cur = &r.sections.back();
        continue;
      }
      auto c = line.find(": ");
      require(cur != nullptr && c != std::string::npos, ErrorCode::IoError, "malformed report line: " + line);
      cur->entries.emplace_back(line.substr(0, c), line.substr(c + 2));
    }
    return r;
  }
  static Report read(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), ErrorCode::IoError, "cannot read " + path);
    return read(is);
  }
};

}  // namespace nlsprof
