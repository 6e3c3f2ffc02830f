#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xferlab/util/binio.hpp"
#include "xferlab/util/error.hpp"

namespace xferlab::evaluation {

// Delimited text table with a fixed header row. Cells never contain the
// separator or a newline; numbers are written in shortest round-trip form.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != header.size()) {
      throw ContractError("table row has " + std::to_string(row.size()) + " cells, header has " +
                          std::to_string(header.size()));
    }
    rows.push_back(std::move(row));
  }

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw FormatError("table has no column '" + std::string(name) + "'");
  }

  std::string serialize(char sep) const {
    auto line = [&](const std::vector<std::string>& cells) {
      std::string out;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].find(sep) != std::string::npos || cells[i].find('\n') != std::string::npos) {
          throw ContractError("table cell '" + cells[i] + "' contains a separator");
        }
        if (i) out += sep;
        out += cells[i];
      }
      return out + "\n";
    };
    std::string out = line(header);
    for (const auto& r : rows) out += line(r);
    return out;
  }

  // Parses text written by serialize; the header must equal `expected` when
  // given.
  static Table parse(std::string_view text, char sep, const std::vector<std::string>& expected = {},
                     const std::string& context = "<table>") {
    Table t;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      auto line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::size_t start = 0;
      while (true) {
        auto next = line.find(sep, start);
        cells.emplace_back(line.substr(start, next == std::string_view::npos ? line.npos : next - start));
        if (next == std::string_view::npos) break;
        start = next + 1;
      }
      if (t.header.empty()) {
        t.header = std::move(cells);
        if (!expected.empty() && t.header != expected) throw FormatError(context + ": unexpected header row");
        continue;
      }
      if (cells.size() != t.header.size()) {
        throw FormatError(context + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                          " cells, found " + std::to_string(cells.size()));
      }
      t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw FormatError(context + ": missing header row");
    return t;
  }
};

inline void save_table(const std::filesystem::path& path, const Table& t) {
  write_file(path, t.serialize(path.extension() == ".tsv" ? '\t' : ','));
}

inline Table load_table(const std::filesystem::path& path, const std::vector<std::string>& expected = {}) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError(path.string() + " does not exist");
  return Table::parse(read_file(path), path.extension() == ".tsv" ? '\t' : ',', expected, path.string());
}

}  // namespace xferlab::evaluation
