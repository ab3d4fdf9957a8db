#include "simviz/npy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "simviz/error.hpp"
#include "simviz/io_util.hpp"

namespace simviz::npy {
namespace {

constexpr std::uint8_t kMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kPreambleSize = 10;  // magic + version + u16 header length

static_assert(std::endian::native == std::endian::little,
              "payload decoding assumes a little-endian host");

// Recursive-descent parser over the restricted header dictionary.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  ArrayHeader parse() {
    std::optional<std::string> descr;
    std::optional<bool> fortran;
    std::optional<std::vector<std::size_t>> shape;

    skip_ws();
    expect('{');
    skip_ws();
    while (peek() != '}') {
      const std::string key = parse_quoted();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        if (descr) fail("duplicate key 'descr'");
        descr = parse_quoted();
      } else if (key == "fortran_order") {
        if (fortran) fail("duplicate key 'fortran_order'");
        fortran = parse_bool();
      } else if (key == "shape") {
        if (shape) fail("duplicate key 'shape'");
        shape = parse_shape();
      } else {
        fail("unexpected key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
      } else if (peek() != '}') {
        fail("expected ',' or '}'");
      }
    }
    ++pos_;
    // Padding: spaces, then exactly one terminating newline.
    while (pos_ < text_.size() && text_[pos_] == ' ') ++pos_;
    if (pos_ + 1 != text_.size() || text_[pos_] != '\n') fail("header must end with padding and a newline");

    if (!descr || !fortran || !shape) fail("header must define descr, fortran_order and shape");

    ArrayHeader h;
    if (*descr == "<f4") {
      h.dtype = DType::F32;
    } else if (*descr == "<f8") {
      h.dtype = DType::F64;
    } else {
      throw Error(Errc::UnsupportedDtype, "descr '" + *descr + "'");
    }
    if (*fortran) throw Error(Errc::FortranOrderUnsupported, "fortran_order is True");
    if (shape->size() != 1 && shape->size() != 3) fail("shape must have 1 or 3 dimensions");
    for (std::size_t d : *shape) {
      if (d == 0) fail("zero-length dimension");
    }
    h.shape = std::move(*shape);
    return h;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::HeaderSyntax, what + " at offset " + std::to_string(pos_));
  }

  char peek() const {
    if (pos_ >= text_.size()) fail("unexpected end of header");
    return text_[pos_];
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  std::string parse_quoted() {
    expect('\'');
    const std::size_t start = pos_;
    while (peek() != '\'') {
      if (text_[pos_] == '\n') fail("newline inside string");
      ++pos_;
    }
    std::string out(text_.substr(start, pos_ - start));
    ++pos_;
    return out;
  }

  bool parse_bool() {
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }

  std::size_t parse_uint() {
    if (peek() < '0' || peek() > '9') fail("expected a dimension");
    std::size_t v = 0;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
      const auto digit = static_cast<std::size_t>(text_[pos_] - '0');
      if (v > (std::numeric_limits<std::size_t>::max() - digit) / 10) fail("dimension overflows");
      v = v * 10 + digit;
      ++pos_;
    }
    return v;
  }

  std::vector<std::size_t> parse_shape() {
    std::vector<std::size_t> dims;
    expect('(');
    skip_ws();
    while (peek() != ')') {
      dims.push_back(parse_uint());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
      } else if (peek() != ')') {
        fail("expected ',' or ')'");
      }
    }
    ++pos_;
    return dims;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string header_text(const ArrayFile& a) {
  std::string dict = "{'descr': '";
  dict += a.dtype == DType::F32 ? "<f4" : "<f8";
  dict += "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < a.shape.size(); ++i) {
    if (i) dict += ", ";
    dict += std::to_string(a.shape[i]);
  }
  if (a.shape.size() == 1) dict += ",";
  dict += "), }";
  const std::size_t unpadded = kPreambleSize + dict.size() + 1;
  const std::size_t padding = (64 - unpadded % 64) % 64;
  dict.append(padding, ' ');
  dict += '\n';
  return dict;
}

}  // namespace

std::size_t ArrayHeader::element_count() const noexcept {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void validate(const ArrayFile& a) {
  if (a.shape.size() != 1 && a.shape.size() != 3) {
    throw Error(Errc::InvalidArray, "shape must have 1 or 3 dimensions, got " + std::to_string(a.shape.size()));
  }
  std::size_t n = 1;
  for (std::size_t d : a.shape) {
    if (d == 0) throw Error(Errc::InvalidArray, "zero-length dimension");
    n *= d;
  }
  if (n != a.data.size()) {
    throw Error(Errc::InvalidArray,
                "data length " + std::to_string(a.data.size()) + " does not match shape product " + std::to_string(n));
  }
  for (double v : a.data) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidArray, "non-finite element");
    if (a.dtype == DType::F32 && static_cast<double>(static_cast<float>(v)) != v) {
      throw Error(Errc::InvalidArray, "value not representable as float32");
    }
  }
}

ArrayHeader read_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(Errc::BadMagic, "not an NPY stream");
  }
  if (bytes.size() < 8) throw Error(Errc::HeaderSyntax, "stream ends inside the version field");
  if (bytes[6] != 1 || bytes[7] != 0) {
    throw Error(Errc::UnsupportedVersion,
                "version " + std::to_string(bytes[6]) + "." + std::to_string(bytes[7]));
  }
  if (bytes.size() < kPreambleSize) throw Error(Errc::HeaderSyntax, "stream ends inside the header length");
  const std::size_t header_len = static_cast<std::size_t>(bytes[8]) | (static_cast<std::size_t>(bytes[9]) << 8);
  if (bytes.size() < kPreambleSize + header_len) throw Error(Errc::HeaderSyntax, "stream ends inside the header");

  const std::string_view text(reinterpret_cast<const char*>(bytes.data() + kPreambleSize), header_len);
  ArrayHeader h = HeaderParser(text).parse();
  h.payload_offset = kPreambleSize + header_len;
  return h;
}

ArrayFile read_array(std::span<const std::uint8_t> bytes) {
  const ArrayHeader h = read_header(bytes);

  std::size_t count = 1;
  for (std::size_t d : h.shape) {
    if (count > std::numeric_limits<std::size_t>::max() / d) throw Error(Errc::TruncatedPayload, "shape too large");
    count *= d;
  }
  const std::size_t available = (bytes.size() - h.payload_offset) / h.element_size();
  if (count > available) {
    throw Error(Errc::TruncatedPayload,
                "shape needs " + std::to_string(count) + " elements, payload holds " + std::to_string(available));
  }

  ArrayFile a;
  a.dtype = h.dtype;
  a.shape = h.shape;
  a.data.resize(count);
  const std::uint8_t* p = bytes.data() + h.payload_offset;
  for (std::size_t i = 0; i < count; ++i) {
    double v;
    if (h.dtype == DType::F32) {
      float f;
      std::memcpy(&f, p + 4 * i, 4);
      v = f;
    } else {
      std::memcpy(&v, p + 8 * i, 8);
    }
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteElement, "element " + std::to_string(i));
    a.data[i] = v;
  }
  return a;
}

std::vector<std::uint8_t> write_array(const ArrayFile& a) {
  validate(a);
  const std::string header = header_text(a);
  if (header.size() > 0xFFFF) throw Error(Errc::InvalidArray, "header too long for NPY v1.0");

  const std::size_t width = a.dtype == DType::F32 ? 4 : 8;
  std::vector<std::uint8_t> out(kPreambleSize + header.size() + a.data.size() * width);
  std::memcpy(out.data(), kMagic, sizeof kMagic);
  out[6] = 1;
  out[7] = 0;
  out[8] = static_cast<std::uint8_t>(header.size() & 0xFF);
  out[9] = static_cast<std::uint8_t>(header.size() >> 8);
  std::memcpy(out.data() + kPreambleSize, header.data(), header.size());

  std::size_t offset = kPreambleSize + header.size();
  for (double v : a.data) {
    if (a.dtype == DType::F32) {
      const float f = static_cast<float>(v);
      std::memcpy(out.data() + offset, &f, 4);
    } else {
      std::memcpy(out.data() + offset, &v, 8);
    }
    offset += width;
  }
  return out;
}

ArrayHeader read_header_file(const std::filesystem::path& path) {
  // The preamble plus header is at most 10 + 65535 bytes.
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes(kPreambleSize + 0xFFFF);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  bytes.resize(static_cast<std::size_t>(in.gcount()));
  try {
    return read_header(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

ArrayFile read_array_file(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = io::read_bytes(path);
  try {
    return read_array(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_array_file(const std::filesystem::path& path, const ArrayFile& a) {
  io::write_bytes(path, write_array(a));
}

}  // namespace simviz::npy
