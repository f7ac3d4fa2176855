// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

// Reader and writer for the safetensors container: an 8-byte little-endian
// header length, a JSON header, then raw little-endian tensor data.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace swa {

enum class DType { F16, F32, F64 };

std::string_view dtype_name(DType dtype);
std::size_t dtype_width(DType dtype);
// Throws UnsupportedDtype for anything other than F16/F32/F64.
DType parse_dtype(std::string_view name);

struct TensorEntry {
  DType dtype = DType::F64;
  std::vector<std::uint64_t> shape;
  // Widened to double on load.
  std::vector<double> values;

  std::size_t rank() const { return shape.size(); }
  std::uint64_t element_count() const;

  friend bool operator==(const TensorEntry&, const TensorEntry&) = default;
};

struct TensorStore {
  std::map<std::string, TensorEntry> tensors;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const TensorStore&, const TensorStore&) = default;
};

inline constexpr std::size_t kMaxTensorRank = 4;

TensorStore parse_container(std::span<const std::uint8_t> bytes);

// Tensors are laid out in name order and the header is padded with spaces to
// an 8-byte boundary, so the output is a pure function of the store.
std::vector<std::uint8_t> write_container(const TensorStore& store);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

TensorStore load_container(const std::filesystem::path& path);

}  // namespace swa
