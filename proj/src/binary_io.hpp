#pragma once

// Little-endian binary containers shared by the on-disk formats.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "wce/matrix.hpp"

namespace wce::io {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

class BinaryWriter {
 public:
  BinaryWriter(const std::filesystem::path& path, std::string_view magic, std::uint32_t version);
  ~BinaryWriter();

  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(std::string_view s);
  void f64s(const std::vector<double>& v);
  void u64s(const std::vector<std::uint64_t>& v);
  void strings(const std::vector<std::string>& v);
  void bytes(const std::vector<std::uint8_t>& v);
  void matrix(const Matrix& m);

  void raw(const void* data, std::size_t n);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  BinaryReader(const std::filesystem::path& path, std::string_view magic, std::uint32_t version);

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  std::vector<double> f64s();
  std::vector<std::uint64_t> u64s();
  std::vector<std::string> strings();
  std::vector<std::uint8_t> bytes();
  Matrix matrix();

  void raw(void* data, std::size_t n);
  /// Throws unless the whole file has been consumed.
  void expect_end();

 private:
  std::uint64_t length(std::uint64_t element_size);

  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t remaining_ = 0;
};

}  // namespace wce::io
