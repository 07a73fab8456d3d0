#include "ood/array_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "ood/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "array payloads are copied verbatim and assume a little-endian host");

namespace ood {
namespace {

constexpr unsigned char kMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};

std::size_t item_size(DType t) {
  switch (t) {
    case DType::float32: return 4;
    case DType::float64: return 8;
    case DType::int64: return 8;
  }
  return 0;
}

const char* descr_of(DType t) {
  switch (t) {
    case DType::float32: return "<f4";
    case DType::float64: return "<f8";
    case DType::int64: return "<i8";
  }
  return "";
}

// Minimal reader for the Python-literal header dict numpy writes.
class HeaderParser {
 public:
  HeaderParser(std::string_view text, std::uint64_t base, std::string_view source)
      : text_(text), base_(base), source_(source) {}

  void parse(std::string& descr, bool& fortran, std::vector<std::size_t>& shape) {
    bool have_descr = false, have_fortran = false, have_shape = false;
    skip_ws();
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') break;
      const std::string key = parse_string();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        descr = parse_string();
        have_descr = true;
      } else if (key == "fortran_order") {
        fortran = parse_bool();
        have_fortran = true;
      } else if (key == "shape") {
        shape = parse_shape();
        have_shape = true;
      } else {
        fail("unexpected header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      skip_ws();
      if (peek() != '}') fail("expected ',' or '}' in header");
    }
    if (!have_descr || !have_fortran || !have_shape)
      fail("header is missing one of descr, fortran_order, shape");
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ArrayIoError(std::string(source_) + ": malformed header: " + what, base_ + pos_);
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
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n'))
      ++pos_;
  }

  std::string parse_string() {
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected quoted string");
    ++pos_;
    const auto end = text_.find(quote, pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
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

  std::vector<std::size_t> parse_shape() {
    std::vector<std::size_t> shape;
    expect('(');
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        break;
      }
      if (peek() < '0' || peek() > '9') fail("expected non-negative integer extent");
      std::size_t value = 0;
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
        value = value * 10 + static_cast<std::size_t>(text_[pos_] - '0');
        ++pos_;
      }
      // numpy writes a trailing 'L' on Python 2 longs
      if (pos_ < text_.size() && text_[pos_] == 'L') ++pos_;
      shape.push_back(value);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
    return shape;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::uint64_t base_;
  std::string_view source_;
};

template <typename T>
std::vector<T> copy_payload(std::span<const std::byte> bytes, std::size_t count) {
  std::vector<T> out(count);
  if (count != 0) std::memcpy(out.data(), bytes.data(), count * sizeof(T));
  return out;
}

std::string format_header(const ArrayFile& array) {
  std::ostringstream os;
  os << "{'descr': '" << descr_of(array.dtype()) << "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < array.shape.size(); ++i) {
    if (i) os << ", ";
    os << array.shape[i];
  }
  if (array.shape.size() == 1) os << ",";
  os << "), }";
  std::string header = os.str();
  const std::size_t unpadded = sizeof(kMagic) + 2 + 2 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  return header;
}

}  // namespace

DType ArrayFile::dtype() const {
  switch (data.index()) {
    case 0: return DType::float32;
    case 1: return DType::float64;
    default: return DType::int64;
  }
}

std::size_t ArrayFile::size() const {
  return std::visit([](const auto& v) { return v.size(); }, data);
}

std::size_t shape_product(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

ArrayFile parse_array(std::span<const std::byte> bytes, std::string_view source) {
  const std::string src(source);
  if (bytes.size() < 10) throw ArrayIoError(src + ": file too short for an array header", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw ArrayIoError(src + ": bad magic string", 0);

  const auto major = static_cast<unsigned>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t header_start = 0;
  if (major == 1) {
    header_len = static_cast<std::size_t>(bytes[8]) | (static_cast<std::size_t>(bytes[9]) << 8);
    header_start = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw ArrayIoError(src + ": file too short for an array header", bytes.size());
    for (int i = 0; i < 4; ++i)
      header_len |= static_cast<std::size_t>(bytes[8 + i]) << (8 * i);
    header_start = 12;
  } else {
    throw ArrayIoError(src + ": unsupported format version " + std::to_string(major), 6);
  }
  if (bytes.size() < header_start + header_len)
    throw ArrayIoError(src + ": truncated header", bytes.size());

  const std::string_view header(reinterpret_cast<const char*>(bytes.data()) + header_start, header_len);
  std::string descr;
  bool fortran = false;
  ArrayFile out;
  HeaderParser(header, header_start, source).parse(descr, fortran, out.shape);
  if (fortran) throw ArrayIoError(src + ": fortran_order arrays are not supported", header_start);

  const std::size_t payload_start = header_start + header_len;
  const std::size_t count = shape_product(out.shape);
  std::size_t itemsize = 0;
  if (descr == "<f4") {
    itemsize = 4;
  } else if (descr == "<f8") {
    itemsize = 8;
  } else if (descr == "<i8") {
    itemsize = 8;
  } else {
    throw ArrayIoError(src + ": unsupported dtype '" + descr + "'", header_start);
  }

  const std::size_t expected = count * itemsize;
  const std::size_t available = bytes.size() - payload_start;
  if (available < expected)
    throw ArrayIoError(src + ": truncated payload, expected " + std::to_string(expected) +
                           " bytes but found " + std::to_string(available),
                       bytes.size());
  if (available > expected)
    throw ArrayIoError(src + ": " + std::to_string(available - expected) +
                           " trailing bytes after payload",
                       payload_start + expected);

  const auto payload = bytes.subspan(payload_start, expected);
  if (descr == "<f4") {
    out.data = copy_payload<float>(payload, count);
  } else if (descr == "<f8") {
    out.data = copy_payload<double>(payload, count);
  } else {
    out.data = copy_payload<std::int64_t>(payload, count);
  }
  return out;
}

ArrayFile read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open array file " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error("read failure on " + path.string());
  return parse_array(std::as_bytes(std::span(raw)), path.string());
}

std::vector<std::byte> serialize_array(const ArrayFile& array) {
  if (shape_product(array.shape) != array.size())
    throw ValidationError("array shape does not match its value count");
  const std::string header = format_header(array);
  std::vector<std::byte> out;
  const std::size_t payload = array.size() * item_size(array.dtype());
  out.reserve(10 + header.size() + payload);
  for (auto c : kMagic) out.push_back(static_cast<std::byte>(c));
  out.push_back(std::byte{1});
  out.push_back(std::byte{0});
  out.push_back(static_cast<std::byte>(header.size() & 0xff));
  out.push_back(static_cast<std::byte>((header.size() >> 8) & 0xff));
  for (char c : header) out.push_back(static_cast<std::byte>(c));
  std::visit(
      [&](const auto& v) {
        const auto* p = reinterpret_cast<const std::byte*>(v.data());
        out.insert(out.end(), p, p + v.size() * sizeof(v[0]));
      },
      array.data);
  return out;
}

void write_array(const ArrayFile& array, const std::filesystem::path& path) {
  const auto bytes = serialize_array(array);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failure on " + path.string());
}

namespace {

template <typename Out>
void copy_values(const ArrayFile& array, Out* dst) {
  std::visit(
      [&](const auto& v) {
        for (std::size_t i = 0; i < v.size(); ++i) dst[i] = static_cast<Out>(v[i]);
      },
      array.data);
}

}  // namespace

Matrix to_matrix(const ArrayFile& array) {
  if (array.rank() != 2)
    throw ValidationError("expected a rank-2 array, got rank " + std::to_string(array.rank()));
  Matrix m(static_cast<Eigen::Index>(array.shape[0]), static_cast<Eigen::Index>(array.shape[1]));
  copy_values(array, m.data());
  return m;
}

Vector to_vector(const ArrayFile& array) {
  if (array.rank() != 1)
    throw ValidationError("expected a rank-1 array, got rank " + std::to_string(array.rank()));
  Vector v(static_cast<Eigen::Index>(array.shape[0]));
  copy_values(array, v.data());
  return v;
}

Labels to_labels(const ArrayFile& array) {
  if (array.rank() != 1)
    throw ValidationError("expected a rank-1 label array, got rank " + std::to_string(array.rank()));
  if (array.dtype() != DType::int64) throw ValidationError("labels must be stored as 8-byte integers");
  return std::get<std::vector<std::int64_t>>(array.data);
}

ArrayFile from_matrix(const Matrix& m) {
  ArrayFile a;
  a.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
  a.data = std::vector<double>(m.data(), m.data() + m.size());
  return a;
}

ArrayFile from_vector(const Vector& v) {
  ArrayFile a;
  a.shape = {static_cast<std::size_t>(v.size())};
  a.data = std::vector<double>(v.data(), v.data() + v.size());
  return a;
}

ArrayFile from_values(std::vector<double> values) {
  ArrayFile a;
  a.shape = {values.size()};
  a.data = std::move(values);
  return a;
}

ArrayFile from_labels(const Labels& labels) {
  ArrayFile a;
  a.shape = {labels.size()};
  a.data = labels;
  return a;
}

}  // namespace ood
