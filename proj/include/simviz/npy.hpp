#pragma once

// Reader/writer for the subset of NPY v1.0 used for activation tensors,
// embeddings and similarity maps: little-endian float32/float64, C order,
// 1-D or 3-D shapes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace simviz::npy {

enum class DType { F32, F64 };

/// In-memory array. Values are held as doubles; for F32 arrays every value
/// must be exactly representable as a float.
struct ArrayFile {
  DType dtype = DType::F64;
  std::vector<std::size_t> shape;
  std::vector<double> data;

  std::size_t size() const noexcept { return data.size(); }
  friend bool operator==(const ArrayFile&, const ArrayFile&) = default;
};

struct ArrayHeader {
  DType dtype = DType::F64;
  std::vector<std::size_t> shape;
  std::size_t payload_offset = 0;

  std::size_t element_count() const noexcept;
  std::size_t element_size() const noexcept { return dtype == DType::F32 ? 4 : 8; }
};

/// Throws Error(InvalidArray) when `a` breaks an ArrayFile invariant.
void validate(const ArrayFile& a);

ArrayHeader read_header(std::span<const std::uint8_t> bytes);
ArrayFile read_array(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_array(const ArrayFile& a);

ArrayHeader read_header_file(const std::filesystem::path& path);
ArrayFile read_array_file(const std::filesystem::path& path);
void write_array_file(const std::filesystem::path& path, const ArrayFile& a);

}  // namespace simviz::npy
