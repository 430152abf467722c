// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <system_error>

#include "wsddn/common/error.hpp"

namespace wsddn::text {

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

void write_file(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// Whitespace-separated token reader over one line. Errors carry the file
/// name and the byte offset of the offending token.
class LineCursor {
 public:
  LineCursor(std::string_view line, std::uint64_t line_offset, const std::string& file)
      : line_(line), base_(line_offset), file_(file) {}

  std::string word(const char* what);
  double real(const char* what);

  template <class Int>
  Int integer(const char* what) {
    const auto tok = next(what);
    Int v{};
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      fail_at(tok, std::string("expected integer ") + what + ", got '" + std::string(tok) + "'");
    }
    return v;
  }

  bool at_end();
  void expect_end();

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(file_, base_, msg); }

 private:
  std::string_view next(const char* what);
  [[noreturn]] void fail_at(std::string_view tok, const std::string& msg) const;
  void skip_space();

  std::string_view line_;
  std::size_t pos_ = 0;
  std::uint64_t base_;
  const std::string& file_;
};

/// Calls `fn` for every non-blank line of the file.
void for_each_line(const std::filesystem::path& path, const std::function<void(LineCursor&)>& fn);

}  // namespace wsddn::text
