#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ppmine/errors.hpp"

namespace ppmine {

struct transaction_record {
  std::string pid;
  std::vector<std::string> items;

  bool operator==(const transaction_record&) const = default;
};

using dataset = std::vector<transaction_record>;

// Lowercase and keep letters only; every other byte is dropped.
inline std::string canonicalize_item(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (unsigned char ch : raw) {
    if (ch >= 'a' && ch <= 'z')
      out.push_back(static_cast<char>(ch));
    else if (ch >= 'A' && ch <= 'Z')
      out.push_back(static_cast<char>(ch - 'A' + 'a'));
  }
  return out;
}

inline bool is_canonical_item(std::string_view item) {
  if (item.empty()) return false;
  return std::all_of(item.begin(), item.end(),
                     [](unsigned char c) { return c >= 'a' && c <= 'z'; });
}

// Canonicalize every item, drop the ones that end up empty, sort, dedupe.
inline transaction_record canonicalize_record(const transaction_record& rec) {
  transaction_record out;
  out.pid = rec.pid;
  out.items.reserve(rec.items.size());
  for (const auto& raw : rec.items) {
    std::string item = canonicalize_item(raw);
    if (!item.empty()) out.items.push_back(std::move(item));
  }
  std::sort(out.items.begin(), out.items.end());
  out.items.erase(std::unique(out.items.begin(), out.items.end()),
                  out.items.end());
  return out;
}

inline dataset canonicalize_dataset(const dataset& records) {
  dataset out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back(canonicalize_record(rec));
  return out;
}

namespace detail {

inline bool csv_needs_quotes(std::string_view field) {
  return field.find_first_of(",\"\n\r") != std::string_view::npos;
}

inline void csv_write_field(std::ostream& os, std::string_view field) {
  if (!csv_needs_quotes(field)) {
    os << field;
    return;
  }
  os << '"';
  for (char ch : field) {
    if (ch == '"') os << '"';
    os << ch;
  }
  os << '"';
}

// Split one CSV line into fields, honoring double-quote escaping.
inline std::vector<std::string> csv_split(const std::string& line,
                                          std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted)
    throw invalid_input("unterminated quote on line " +
                        std::to_string(line_no));
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace detail

inline void write_dataset_csv(std::ostream& os, const dataset& records) {
  os << "pid,items\n";
  for (const auto& rec : records) {
    detail::csv_write_field(os, rec.pid);
    os << ',';
    std::string joined;
    for (std::size_t i = 0; i < rec.items.size(); ++i) {
      if (i) joined.push_back(';');
      joined += rec.items[i];
    }
    detail::csv_write_field(os, joined);
    os << '\n';
  }
}

inline void write_dataset_csv(const std::string& path,
                              const dataset& records) {
  std::ofstream os(path);
  if (!os) throw invalid_input("cannot open for writing: " + path);
  write_dataset_csv(os, records);
}

inline dataset read_dataset_csv(std::istream& is) {
  dataset records;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!saw_header) {
      if (line != "pid,items")
        throw invalid_input("expected header 'pid,items', got '" + line + "'");
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto fields = detail::csv_split(line, line_no);
    if (fields.size() != 2)
      throw invalid_input("expected 2 fields on line " +
                          std::to_string(line_no) + ", got " +
                          std::to_string(fields.size()));
    transaction_record rec;
    rec.pid = std::move(fields[0]);
    std::stringstream items(fields[1]);
    std::string item;
    while (std::getline(items, item, ';'))
      if (!item.empty()) rec.items.push_back(item);
    records.push_back(std::move(rec));
  }
  if (!saw_header) throw invalid_input("empty dataset file: missing header");
  return records;
}

inline dataset read_dataset_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw invalid_input("cannot open for reading: " + path);
  return read_dataset_csv(is);
}

}  // namespace ppmine
