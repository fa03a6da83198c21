#include "metal/csv.hpp"

#include "metal/error.hpp"

namespace metal::csv {

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

Table parse(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<Row> rows;
  Row current;
  std::string field;
  std::size_t line = 1;
  current.line = 1;
  bool in_quotes = false, quoted_field = false, row_has_content = false;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    quoted_field = false;
  };
  auto end_row = [&] {
    end_field();
    if (row_has_content || current.fields.size() > 1 || !current.fields.front().empty())
      rows.push_back(std::move(current));
    current = Row{};
    current.line = line;
    row_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || quoted_field)
          throw Error(ErrorCode::MalformedCsv, std::to_string(line),
                      "stray quote on line " + std::to_string(line));
        in_quotes = quoted_field = row_has_content = true;
        break;
      case ',':
        end_field();
        row_has_content = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        ++line;
        end_row();
        break;
      default:
        if (quoted_field)
          throw Error(ErrorCode::MalformedCsv, std::to_string(line),
                      "text after closing quote on line " + std::to_string(line));
        field += c;
        row_has_content = true;
    }
  }
  if (in_quotes)
    throw Error(ErrorCode::MalformedCsv, std::to_string(current.line),
                "unterminated quoted field starting on line " + std::to_string(current.line));
  end_row();

  if (rows.empty()) throw Error(ErrorCode::MalformedCsv, "1", "missing header row");
  Table table;
  table.header = std::move(rows.front().fields);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].fields.size() != table.header.size())
      throw Error(ErrorCode::MalformedCsv, std::to_string(rows[r].line),
                  "line " + std::to_string(rows[r].line) + " has " +
                      std::to_string(rows[r].fields.size()) + " fields, header has " +
                      std::to_string(table.header.size()));
    table.rows.push_back(std::move(rows[r]));
  }
  return table;
}

std::string escape(std::string_view f) {
  if (f.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(f);
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string write_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += escape(fields[i]);
  }
  out += '\n';
  return out;
}

}  // namespace metal::csv
