#include "usemetrics/io_utils.hpp"

#include <zlib.h>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "usemetrics/errors.hpp"

namespace usemetrics {

namespace {

[[noreturn]] void io_fail(const std::string& what, const std::string& path) {
  throw Error(ErrorCode::IoError, what + ": " + path);
}

}  // namespace

void for_each_line(const std::string& path,
                   const std::function<void(const std::string&)>& fn) {
  // gzopen reads gzip members and falls back to transparent copy for plain
  // files, so one code path serves both.
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) io_fail("cannot open", path);

  std::string line;
  char buf[1 << 16];
  bool saw_any = false;
  while (true) {
    char* got = gzgets(file, buf, sizeof(buf));
    if (got == nullptr) {
      int errnum = 0;
      const char* msg = gzerror(file, &errnum);
      if (errnum != Z_OK && errnum != Z_STREAM_END) {
        std::string detail = msg != nullptr ? msg : "gzip error";
        gzclose(file);
        io_fail(detail, path);
      }
      break;
    }
    saw_any = true;
    line += buf;
    if (!line.empty() && line.back() == '\n') {
      line.pop_back();
      if (!line.empty() && line.back() == '\r') line.pop_back();
      fn(line);
      line.clear();
    }
  }
  if (!line.empty()) {
    if (line.back() == '\r') line.pop_back();
    fn(line);  // final line without newline
  }
  (void)saw_any;
  gzclose(file);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> lines;
  for_each_line(path, [&lines](const std::string& l) { lines.push_back(l); });
  return lines;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail("cannot open", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path dir = target.parent_path();
  if (dir.empty()) dir = ".";
  std::error_code ec;
  fs::create_directories(dir, ec);

  fs::path tmp = dir / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) io_fail("cannot create", tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) io_fail("write failed", tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) io_fail("rename failed: " + ec.message(), path);
}

std::string csv_escape(const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out;
  out.reserve(field.size() + 2);
  out += '"';
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_escape(fields[i]);
  }
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
    ++i;
  }
  if (in_quotes)
    throw Error(ErrorCode::MalformedLine, "unbalanced quote in CSV: " + line);
  fields.push_back(cur);
  return fields;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace usemetrics
