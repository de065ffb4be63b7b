#include <sstream>

#include "usemetrics/ingest.hpp"
#include "usemetrics/io_utils.hpp"

namespace usemetrics {

namespace {

constexpr std::size_t kJr1Columns = 18;  // 5 identity + 12 months + YTD

std::int64_t parse_count(const std::string& cell, const std::string& journal,
                         const std::string& what,
                         std::vector<std::string>& warnings) {
  if (cell.empty()) {
    warnings.push_back("empty " + what + " cell for journal '" + journal +
                       "' treated as 0");
    return 0;
  }
  for (char c : cell)
    if (c < '0' || c > '9')
      throw Error(ErrorCode::ColumnMismatch,
                  "non-numeric " + what + " value '" + cell +
                      "' for journal '" + journal + "'");
  return std::stoll(cell);
}

}  // namespace

Jr1ParseResult parse_counter_jr1(const std::string& csv) {
  std::vector<std::string> lines;
  {
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty())
    throw Error(ErrorCode::ColumnMismatch, "empty JR1 document");

  std::vector<std::string> header = csv_split(lines[0]);
  if (header.size() != kJr1Columns)
    throw Error(ErrorCode::ColumnMismatch,
                "JR1 header has " + std::to_string(header.size()) +
                    " columns, expected " + std::to_string(kJr1Columns));

  Jr1ParseResult result;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (lines[row].empty()) continue;
    std::vector<std::string> fields = csv_split(lines[row]);
    if (fields.size() != kJr1Columns)
      throw Error(ErrorCode::ColumnMismatch,
                  "JR1 row " + std::to_string(row + 1) + " has " +
                      std::to_string(fields.size()) + " columns, expected " +
                      std::to_string(kJr1Columns));
    JournalMonthlyUsage r;
    r.journal_title = fields[0];
    r.publisher = fields[1];
    r.platform = fields[2];
    r.print_issn = fields[3];
    r.online_issn = fields[4];
    std::int64_t computed = 0;
    for (int m = 0; m < 12; ++m) {
      r.months[static_cast<std::size_t>(m)] = parse_count(
          fields[static_cast<std::size_t>(5 + m)], r.journal_title, "month",
          result.warnings);
      computed += r.months[static_cast<std::size_t>(m)];
    }
    r.ytd =
        parse_count(fields[17], r.journal_title, "YTD", result.warnings);
    if (fields[17].empty()) r.ytd = computed;
    if (r.ytd != computed)
      result.warnings.push_back(
          "YtdInconsistent: journal '" + r.journal_title + "' declared " +
          std::to_string(r.ytd) + " computed " + std::to_string(computed));
    result.rows.push_back(std::move(r));
  }
  return result;
}

}  // namespace usemetrics
