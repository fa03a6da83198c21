#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace metal::csv {

struct Row {
  std::size_t line = 0;  // 1-based line where the row starts
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

/// RFC 4180 dialect: comma separator, double-quote escaping, CRLF or LF.
/// Throws Error(MalformedCsv) on unterminated quotes or ragged rows.
Table parse(std::string_view text);

std::string escape(std::string_view field);
std::string write_row(const std::vector<std::string>& fields);

}  // namespace metal::csv
