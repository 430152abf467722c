// SPDX-License-Identifier: Apache-2.0
#include "common/text_io.hpp"

#include <fstream>
#include <iterator>

namespace wsddn::text {

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw NotFoundError("cannot open " + path.string() + " for writing");
  f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw NotFoundError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void LineCursor::skip_space() {
  while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t' || line_[pos_] == '\r')) {
    ++pos_;
  }
}

std::string_view LineCursor::next(const char* what) {
  skip_space();
  if (pos_ >= line_.size()) {
    throw ParseError(file_, base_ + pos_, std::string("missing field: ") + what);
  }
  const auto start = pos_;
  while (pos_ < line_.size() && line_[pos_] != ' ' && line_[pos_] != '\t' && line_[pos_] != '\r') {
    ++pos_;
  }
  return line_.substr(start, pos_ - start);
}

void LineCursor::fail_at(std::string_view tok, const std::string& msg) const {
  throw ParseError(file_, base_ + static_cast<std::uint64_t>(tok.data() - line_.data()), msg);
}

std::string LineCursor::word(const char* what) { return std::string(next(what)); }

double LineCursor::real(const char* what) {
  const auto tok = next(what);
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    fail_at(tok, std::string("expected number ") + what + ", got '" + std::string(tok) + "'");
  }
  return v;
}

bool LineCursor::at_end() {
  skip_space();
  return pos_ >= line_.size();
}

void LineCursor::expect_end() {
  if (!at_end()) throw ParseError(file_, base_ + pos_, "unexpected trailing field");
}

void for_each_line(const std::filesystem::path& path, const std::function<void(LineCursor&)>& fn) {
  const std::string contents = read_file(path);
  const std::string name = path.string();
  std::size_t start = 0;
  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string::npos) end = contents.size();
    LineCursor cursor(std::string_view(contents).substr(start, end - start), start, name);
    if (!cursor.at_end()) {
      LineCursor fresh(std::string_view(contents).substr(start, end - start), start, name);
      fn(fresh);
    }
    start = end + 1;
  }
}

}  // namespace wsddn::text
