#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "ood/types.hpp"

namespace ood {

enum class DType { float32, float64, int64 };

/// In-memory image of a .npy file: C-order data, little-endian on disk.
struct ArrayFile {
  using Storage = std::variant<std::vector<float>, std::vector<double>, std::vector<std::int64_t>>;

  std::vector<std::size_t> shape;
  Storage data;

  DType dtype() const;
  std::size_t size() const;
  std::size_t rank() const { return shape.size(); }
};

std::size_t shape_product(std::span<const std::size_t> shape);

ArrayFile read_array(const std::filesystem::path& path);

/// Parses an in-memory .npy image. `source` only labels error messages.
ArrayFile parse_array(std::span<const std::byte> bytes, std::string_view source = "<memory>");

/// Serializes to format version 1.0; header is padded to a 64-byte boundary.
std::vector<std::byte> serialize_array(const ArrayFile& array);

void write_array(const ArrayFile& array, const std::filesystem::path& path);

// Conversions between ArrayFile and the numeric core. Floating-point data is
// promoted to double; integers are accepted as matrix input too.

Matrix to_matrix(const ArrayFile& array);
Vector to_vector(const ArrayFile& array);
Labels to_labels(const ArrayFile& array);

ArrayFile from_matrix(const Matrix& m);
ArrayFile from_vector(const Vector& v);
ArrayFile from_values(std::vector<double> values);
ArrayFile from_labels(const Labels& labels);

}  // namespace ood
