#pragma once

// Numeric CSV ingestion.  Comma-separated, optional header row (detected by
// attempting to parse every field of the first row as a number), blank
// lines skipped.  Any malformed field is a hard error naming its 1-based
// row and column; ragged rows and non-finite values are rejected too.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "evcop/errors.hpp"
#include "evcop/ranks.hpp"

namespace evcop {

struct CsvTable {
  Matrix values;
  std::vector<std::string> column_names;  // synthesized "col1".. when no header
  bool had_header = false;
};

namespace detail {

inline std::string csv_trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline bool csv_parse_double(const std::string& field, double& out) {
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(csv_trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(csv_trim(cur));
  return fields;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in, const std::string& name = "<stream>") {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t ncols = 0;
  bool saw_first = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (detail::csv_trim(line).empty()) continue;
    std::vector<std::string> fields = detail::csv_split(line);

    if (!saw_first) {
      saw_first = true;
      bool all_numeric = true;
      std::vector<double> parsed(fields.size());
      for (std::size_t c = 0; c < fields.size(); ++c) {
        if (!detail::csv_parse_double(fields[c], parsed[c])) {
          all_numeric = false;
          break;
        }
      }
      ncols = fields.size();
      if (all_numeric) {
        table.had_header = false;
        for (std::size_t c = 0; c < ncols; ++c) {
          table.column_names.push_back("col" + std::to_string(c + 1));
        }
        rows.push_back(std::move(parsed));
      } else {
        table.had_header = true;
        table.column_names = fields;
      }
      continue;
    }

    if (fields.size() != ncols) {
      throw CsvParseError(name + ": row " + std::to_string(lineno) + " has " +
                          std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(ncols));
    }
    std::vector<double> parsed(ncols);
    for (std::size_t c = 0; c < ncols; ++c) {
      if (!detail::csv_parse_double(fields[c], parsed[c])) {
        throw CsvParseError(name + ": row " + std::to_string(lineno) + ", column " +
                            std::to_string(c + 1) + ": cannot parse '" + fields[c] + "'");
      }
      if (!std::isfinite(parsed[c])) {
        throw CsvParseError(name + ": row " + std::to_string(lineno) + ", column " +
                            std::to_string(c + 1) + ": non-finite value");
      }
    }
    rows.push_back(std::move(parsed));
  }

  if (rows.empty()) {
    throw CsvParseError(name + ": no data rows");
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(ncols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < ncols; ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw CsvParseError(path + ": cannot open file");
  }
  return read_csv(in, path);
}

// Column selection: each selector is a header name or a 1-based index.
inline CsvTable select_columns(const CsvTable& table,
                               const std::vector<std::string>& selectors) {
  if (selectors.empty()) return table;
  CsvTable out;
  out.had_header = table.had_header;
  std::vector<Eigen::Index> keep;
  for (const std::string& sel : selectors) {
    Eigen::Index found = -1;
    double as_num = 0.0;
    if (detail::csv_parse_double(sel, as_num) && as_num == static_cast<Eigen::Index>(as_num)) {
      const auto k = static_cast<Eigen::Index>(as_num);
      if (k < 1 || k > table.values.cols()) {
        throw std::invalid_argument("column index " + sel + " out of range 1.." +
                                    std::to_string(table.values.cols()));
      }
      found = k - 1;
    } else {
      for (std::size_t c = 0; c < table.column_names.size(); ++c) {
        if (table.column_names[c] == sel) {
          found = static_cast<Eigen::Index>(c);
          break;
        }
      }
      if (found < 0) {
        throw std::invalid_argument("no column named '" + sel + "'");
      }
    }
    keep.push_back(found);
  }
  out.values.resize(table.values.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.values.col(static_cast<Eigen::Index>(c)) = table.values.col(keep[c]);
    out.column_names.push_back(table.column_names[static_cast<std::size_t>(keep[c])]);
  }
  return out;
}

}  // namespace evcop
