#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xferlab/util/error.hpp"

namespace xferlab {

// Structured text: `[section]` headers followed by `key = value` lines.
// Lines starting with '#' or ';' are comments. Keys outside any section
// belong to the unnamed section "". Section and key order is preserved so
// serialization is byte-stable.
//
//   file    := { line '\n' }
//   line    := blank | comment | '[' name ']' | key '=' value
class StructuredText {
 public:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* find(std::string_view key) const {
      for (const auto& [k, v] : entries)
        if (k == key) return &v;
      return nullptr;
    }
  };

  static StructuredText parse(std::string_view text, const std::string& origin = "<text>") {
    StructuredText out;
    Section* current = nullptr;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      auto line = trim(text.substr(pos, end - pos));
      pos = end + 1;
      ++line_no;
      if (line.empty() || line[0] == '#' || line[0] == ';') {
        if (end == text.size()) break;
        continue;
      }
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
        }
        auto name = std::string(trim(line.substr(1, line.size() - 2)));
        if (out.find_section(name) != nullptr) {
          throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate section [" + name + "]");
        }
        out.sections_.push_back({name, {}});
        current = &out.sections_.back();
      } else {
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
          throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        auto key = std::string(trim(line.substr(0, eq)));
        auto value = std::string(trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        if (current == nullptr) {
          out.sections_.push_back({"", {}});
          current = &out.sections_.back();
        }
        if (current->find(key) != nullptr) {
          throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        current->entries.emplace_back(std::move(key), std::move(value));
      }
      if (end == text.size()) break;
    }
    return out;
  }

  std::string serialize() const {
    std::string out;
    bool first = true;
    for (const auto& s : sections_) {
      if (!first) out += "\n";
      first = false;
      if (!s.name.empty()) out += "[" + s.name + "]\n";
      for (const auto& [k, v] : s.entries) out += k + " = " + v + "\n";
    }
    return out;
  }

  Section& section(const std::string& name) {
    if (auto* s = find_section(name)) return *s;
    sections_.push_back({name, {}});
    return sections_.back();
  }

  void set(const std::string& section_name, const std::string& key, std::string value) {
    auto& s = section(section_name);
    for (auto& [k, v] : s.entries) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    s.entries.emplace_back(key, std::move(value));
  }

  const Section* find_section(std::string_view name) const {
    for (const auto& s : sections_)
      if (s.name == name) return &s;
    return nullptr;
  }
  Section* find_section(std::string_view name) {
    for (auto& s : sections_)
      if (s.name == name) return &s;
    return nullptr;
  }

  std::optional<std::string> get(std::string_view section_name, std::string_view key) const {
    const auto* s = find_section(section_name);
    if (s == nullptr) return std::nullopt;
    const auto* v = s->find(key);
    if (v == nullptr) return std::nullopt;
    return *v;
  }

  const std::vector<Section>& sections() const { return sections_; }

  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  }

 private:
  std::vector<Section> sections_;
};

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& what) {
  s = StructuredText::trim(s);
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(what + ": expected a real number, got '" + std::string(s) + "'");
  }
  return v;
}

inline std::int64_t parse_int(std::string_view s, const std::string& what) {
  s = StructuredText::trim(s);
  std::int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(what + ": expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

inline std::uint64_t parse_u64(std::string_view s, const std::string& what) {
  s = StructuredText::trim(s);
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(what + ": expected an unsigned integer, got '" + std::string(s) + "'");
  }
  return v;
}

inline bool parse_bool(std::string_view s, const std::string& what) {
  s = StructuredText::trim(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(what + ": expected a boolean, got '" + std::string(s) + "'");
}

inline std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto next = s.find(sep, pos);
    auto item = StructuredText::trim(s.substr(pos, next == std::string_view::npos ? s.npos : next - pos));
    if (!item.empty()) out.emplace_back(item);
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline std::vector<double> parse_double_list(std::string_view s, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_double(item, what));
  return out;
}

template <typename Range>
std::string join_doubles(const Range& values, std::string_view sep = ", ") {
  std::string out;
  bool first = true;
  for (double v : values) {
    if (!first) out += sep;
    first = false;
    out += format_double(v);
  }
  return out;
}

inline std::string join_strings(const std::vector<std::string>& values, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += values[i];
  }
  return out;
}

}  // namespace xferlab
