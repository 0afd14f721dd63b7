#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace frofa::npy {

// A raw .npy array: header metadata plus the untouched little-endian payload.
struct Array {
  std::string descr;  // e.g. "<f4", "<i8"
  bool fortran_order = false;
  std::vector<std::uint64_t> shape;
  std::vector<std::uint8_t> bytes;

  [[nodiscard]] std::uint64_t element_count() const;
  [[nodiscard]] std::size_t item_size() const;
};

// Reads format versions 1.0, 2.0 and 3.0.
Array read(const std::filesystem::path& path);

// Writes a version 1.0 file (2.0 when the header does not fit in 64 KiB).
void write(const std::filesystem::path& path, const Array& array);

Array from_floats(const std::vector<float>& values, std::vector<std::uint64_t> shape);
Array from_int64(const std::vector<std::int64_t>& values, std::vector<std::uint64_t> shape);
Array from_int32(const std::vector<std::int32_t>& values, std::vector<std::uint64_t> shape);

}  // namespace frofa::npy
