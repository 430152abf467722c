// SPDX-License-Identifier: Apache-2.0
#include "wsddn/autodiff/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "wsddn/common/error.hpp"

namespace wsddn::ad {

namespace {

static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");

template <class T>
void put(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    char buf[sizeof(T)];
    std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(source_, pos_, msg); }

  std::size_t pos() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) fail(std::string("truncated while reading ") + what);
  }

  std::string_view bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_tensors(const ParameterSet& tensors) {
  std::string out = "WSDD";
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    for (double v : t.data()) put<double>(out, v);
  }
  return out;
}

ParameterSet decode_tensors(std::string_view bytes, const std::string& source) {
  Reader in(bytes, source);
  if (in.take(4, "magic") != "WSDD") throw ParseError(source, 0, "bad magic bytes (expected \"WSDD\")");
  const auto version_at = in.pos();
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw ParseError(source, version_at, "unsupported format version " + std::to_string(version));
  }
  const auto count = in.get<std::uint64_t>("tensor count");
  ParameterSet out;
  for (std::uint64_t n = 0; n < count; ++n) {
    const auto entry_at = in.pos();
    const auto name_len = in.get<std::uint32_t>("name length");
    std::string name(in.take(name_len, "name"));
    const auto rank = in.get<std::uint32_t>("rank");
    if (rank > 8) in.fail("implausible tensor rank " + std::to_string(rank));
    Shape shape;
    std::uint64_t elements = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto d = in.get<std::uint64_t>("dimension");
      if (d == 0) in.fail("zero tensor extent");
      if (d > (std::uint64_t{1} << 40) / elements) in.fail("tensor too large");
      elements *= d;
      shape.push_back(static_cast<std::size_t>(d));
    }
    std::vector<double> data(static_cast<std::size_t>(elements));
    for (auto& v : data) v = in.get<double>("tensor data");
    if (out.contains(name)) throw ParseError(source, entry_at, "duplicate tensor '" + name + "'");
    out.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (!in.done()) in.fail("trailing bytes after last tensor");
  return out;
}

void write_tensors(const std::filesystem::path& path, const ParameterSet& tensors) {
  const auto bytes = encode_tensors(tensors);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw NotFoundError("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

ParameterSet read_tensors(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw NotFoundError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_tensors(bytes, path.string());
}

}  // namespace wsddn::ad
