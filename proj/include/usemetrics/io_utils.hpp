#pragma once

#include <functional>
#include <string>
#include <vector>

namespace usemetrics {

// Reads a text file line by line, transparently inflating gzip (detected by
// magic bytes, not extension). Strips trailing \r. Throws Error(IoError).
void for_each_line(const std::string& path,
                   const std::function<void(const std::string&)>& fn);

std::vector<std::string> read_lines(const std::string& path);

std::string read_file(const std::string& path);

// Writes content to path atomically: temp file in the same directory, then
// rename. Throws Error(IoError).
void atomic_write_file(const std::string& path, const std::string& content);

// ---------------------------------------------------------------------------
// CSV (RFC 4180 flavor: comma separator, double-quote escaping, LF endings)

std::string csv_escape(const std::string& field);
std::string csv_join(const std::vector<std::string>& fields);

// Splits one CSV record (no embedded newlines). Throws Error(MalformedLine)
// on unbalanced quotes.
std::vector<std::string> csv_split(const std::string& line);

// Full-precision, locale-independent float formatting (shortest round-trip).
std::string format_double(double v);

}  // namespace usemetrics
