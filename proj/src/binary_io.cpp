#include "binary_io.hpp"

#include "wce/error.hpp"

namespace wce::io {

BinaryWriter::BinaryWriter(const std::filesystem::path& path, std::string_view magic,
                           std::uint32_t version)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  raw(magic.data(), magic.size());
  u32(version);
}

BinaryWriter::~BinaryWriter() {
  if (out_.is_open()) out_.close();
}

void BinaryWriter::raw(const void* data, std::size_t n) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out_) fail(ErrorKind::Io, "write failed: " + path_.string());
}

void BinaryWriter::str(std::string_view s) {
  u64(s.size());
  raw(s.data(), s.size());
}

void BinaryWriter::f64s(const std::vector<double>& v) {
  u64(v.size());
  raw(v.data(), v.size() * sizeof(double));
}

void BinaryWriter::u64s(const std::vector<std::uint64_t>& v) {
  u64(v.size());
  raw(v.data(), v.size() * sizeof(std::uint64_t));
}

void BinaryWriter::strings(const std::vector<std::string>& v) {
  u64(v.size());
  for (const auto& s : v) str(s);
}

void BinaryWriter::bytes(const std::vector<std::uint8_t>& v) {
  u64(v.size());
  raw(v.data(), v.size());
}

void BinaryWriter::matrix(const Matrix& m) {
  u64(m.rows());
  u64(m.cols());
  raw(m.data().data(), m.size() * sizeof(double));
}

void BinaryWriter::close() {
  out_.close();
  if (!out_) fail(ErrorKind::Io, "close failed: " + path_.string());
}

BinaryReader::BinaryReader(const std::filesystem::path& path, std::string_view magic,
                           std::uint32_t version)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) fail(ErrorKind::Io, "cannot open for reading: " + path.string());
  std::error_code ec;
  remaining_ = std::filesystem::file_size(path, ec);
  if (ec) fail(ErrorKind::Io, "cannot stat: " + path.string());
  std::string got(magic.size(), '\0');
  raw(got.data(), got.size());
  if (got != magic) {
    fail(ErrorKind::Parse, path.string() + ": bad magic, expected " + std::string(magic));
  }
  const std::uint32_t v = u32();
  if (v != version) {
    fail(ErrorKind::Parse, path.string() + ": unsupported version " + std::to_string(v));
  }
}

void BinaryReader::raw(void* data, std::size_t n) {
  if (n > remaining_) fail(ErrorKind::Parse, path_.string() + ": truncated file");
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (!in_) fail(ErrorKind::Parse, path_.string() + ": truncated file");
  remaining_ -= n;
}

std::uint8_t BinaryReader::u8() {
  std::uint8_t v;
  raw(&v, 1);
  return v;
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v;
  raw(&v, sizeof v);
  return v;
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  raw(&v, sizeof v);
  return v;
}

double BinaryReader::f64() {
  double v;
  raw(&v, sizeof v);
  return v;
}

std::uint64_t BinaryReader::length(std::uint64_t element_size) {
  const std::uint64_t n = u64();
  if (element_size > 0 && n > remaining_ / element_size) {
    fail(ErrorKind::Parse, path_.string() + ": length field exceeds file size");
  }
  return n;
}

std::string BinaryReader::str() {
  std::string s(length(1), '\0');
  raw(s.data(), s.size());
  return s;
}

std::vector<double> BinaryReader::f64s() {
  std::vector<double> v(length(sizeof(double)));
  raw(v.data(), v.size() * sizeof(double));
  return v;
}

std::vector<std::uint64_t> BinaryReader::u64s() {
  std::vector<std::uint64_t> v(length(sizeof(std::uint64_t)));
  raw(v.data(), v.size() * sizeof(std::uint64_t));
  return v;
}

std::vector<std::string> BinaryReader::strings() {
  const std::uint64_t n = length(sizeof(std::uint64_t));
  std::vector<std::string> v;
  v.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) v.push_back(str());
  return v;
}

std::vector<std::uint8_t> BinaryReader::bytes() {
  std::vector<std::uint8_t> v(length(1));
  raw(v.data(), v.size());
  return v;
}

Matrix BinaryReader::matrix() {
  const std::uint64_t rows = u64();
  const std::uint64_t cols = u64();
  if (cols != 0 && rows > remaining_ / sizeof(double) / cols) {
    fail(ErrorKind::Parse, path_.string() + ": matrix shape exceeds file size");
  }
  std::vector<double> data(rows * cols);
  raw(data.data(), data.size() * sizeof(double));
  return Matrix(rows, cols, std::move(data));
}

void BinaryReader::expect_end() {
  if (remaining_ != 0) fail(ErrorKind::Parse, path_.string() + ": trailing bytes");
}

}  // namespace wce::io
