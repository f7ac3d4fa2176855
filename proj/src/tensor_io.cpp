// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include "swa/tensor_io.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <tuple>
#include <utility>

#include "swa/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace swa {

using json = nlohmann::json;

namespace {

constexpr std::size_t kPrefixBytes = 8;
constexpr const char* kMetadataKey = "__metadata__";

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedHeader, "malformed header: " + what);
}

std::uint64_t read_u64_le(std::span<const std::uint8_t> bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < kPrefixBytes; ++i) {
    v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  }
  return v;
}

void append_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (std::size_t i = 0; i < kPrefixBytes; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

std::uint64_t checked_product(const std::vector<std::uint64_t>& shape,
                              const std::string& name) {
  std::uint64_t n = 1;
  for (auto d : shape) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
      malformed("shape of '" + name + "' overflows");
    }
    n *= d;
  }
  return n;
}

std::vector<double> decode_values(const std::uint8_t* p, std::uint64_t count, DType dtype,
                                  const std::string& name) {
  std::vector<double> values(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    double v = 0.0;
    switch (dtype) {
      case DType::F16: {
        std::uint16_t bits;
        std::memcpy(&bits, p + 2 * i, 2);
        v = static_cast<double>(static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(bits)));
        break;
      }
      case DType::F32: {
        float f;
        std::memcpy(&f, p + 4 * i, 4);
        v = f;
        break;
      }
      case DType::F64:
        std::memcpy(&v, p + 8 * i, 8);
        break;
    }
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteValue,
                  "non-finite value in tensor '" + name + "' at element " + std::to_string(i));
    }
    values[i] = v;
  }
  return values;
}

void encode_values(std::vector<std::uint8_t>& out, const TensorEntry& t) {
  const std::size_t width = dtype_width(t.dtype);
  const std::size_t start = out.size();
  out.resize(start + width * t.values.size());
  std::uint8_t* p = out.data() + start;
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    const double v = t.values[i];
    switch (t.dtype) {
      case DType::F16: {
        const auto bits = Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(static_cast<float>(v)));
        std::memcpy(p + 2 * i, &bits, 2);
        break;
      }
      case DType::F32: {
        const auto f = static_cast<float>(v);
        std::memcpy(p + 4 * i, &f, 4);
        break;
      }
      case DType::F64:
        std::memcpy(p + 8 * i, &v, 8);
        break;
    }
  }
}

}  // namespace

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::F16: return "F16";
    case DType::F32: return "F32";
    case DType::F64: return "F64";
  }
  return "?";
}

std::size_t dtype_width(DType dtype) {
  switch (dtype) {
    case DType::F16: return 2;
    case DType::F32: return 4;
    case DType::F64: return 8;
  }
  return 0;
}

DType parse_dtype(std::string_view name) {
  if (name == "F16") return DType::F16;
  if (name == "F32") return DType::F32;
  if (name == "F64") return DType::F64;
  throw Error(ErrorCode::UnsupportedDtype, "unsupported dtype '" + std::string(name) + "'");
}

std::uint64_t TensorEntry::element_count() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

TensorStore parse_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPrefixBytes) malformed("file shorter than the 8-byte length prefix");
  const std::uint64_t header_len = read_u64_le(bytes);
  if (header_len > bytes.size() - kPrefixBytes) {
    malformed("declared header length " + std::to_string(header_len) +
              " exceeds file size " + std::to_string(bytes.size()));
  }
  const std::string_view header_text(reinterpret_cast<const char*>(bytes.data() + kPrefixBytes),
                                     static_cast<std::size_t>(header_len));
  const auto data = bytes.subspan(kPrefixBytes + static_cast<std::size_t>(header_len));

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  if (!header.is_object()) malformed("header is not a JSON object");

  struct Range {
    std::uint64_t begin, end;
    const std::string* name;
  };
  std::vector<Range> ranges;
  TensorStore store;

  for (const auto& [name, entry] : header.items()) {
    if (name == kMetadataKey) {
      if (!entry.is_object()) malformed("__metadata__ is not an object");
      for (const auto& [k, v] : entry.items()) {
        if (!v.is_string()) malformed("__metadata__ value for '" + k + "' is not a string");
        store.metadata.emplace(k, v.get<std::string>());
      }
      continue;
    }
    if (!entry.is_object()) malformed("entry '" + name + "' is not an object");
    const auto dt = entry.find("dtype");
    const auto sh = entry.find("shape");
    const auto off = entry.find("data_offsets");
    if (dt == entry.end() || !dt->is_string()) malformed("entry '" + name + "' lacks a dtype");
    if (sh == entry.end() || !sh->is_array()) malformed("entry '" + name + "' lacks a shape");
    if (off == entry.end() || !off->is_array() || off->size() != 2) {
      malformed("entry '" + name + "' lacks data_offsets [begin, end]");
    }

    TensorEntry t;
    t.dtype = parse_dtype(dt->get<std::string>());
    if (sh->size() > kMaxTensorRank) {
      malformed("tensor '" + name + "' has rank " + std::to_string(sh->size()) + " > 4");
    }
    for (const auto& d : *sh) {
      if (!d.is_number_unsigned()) malformed("tensor '" + name + "' has a non-integer or negative dim");
      t.shape.push_back(d.get<std::uint64_t>());
    }
    for (const auto& o : *off) {
      if (!o.is_number_unsigned()) malformed("tensor '" + name + "' has invalid data_offsets");
    }
    const auto begin = (*off)[0].get<std::uint64_t>();
    const auto end = (*off)[1].get<std::uint64_t>();
    if (begin > end || end > data.size()) {
      malformed("tensor '" + name + "' data range [" + std::to_string(begin) + ", " +
                std::to_string(end) + ") outside data buffer of " + std::to_string(data.size()) +
                " bytes");
    }
    const std::uint64_t count = checked_product(t.shape, name);
    if (count > (end - begin) / dtype_width(t.dtype) ||
        count * dtype_width(t.dtype) != end - begin) {
      malformed("tensor '" + name + "' byte length " + std::to_string(end - begin) +
                " does not match shape and dtype");
    }
    auto [it, inserted] = store.tensors.emplace(name, std::move(t));
    if (!inserted) malformed("duplicate tensor name '" + name + "'");
    ranges.push_back({begin, end, &it->first});
  }

  std::sort(ranges.begin(), ranges.end(), [](const Range& a, const Range& b) {
    return std::tie(a.begin, a.end) < std::tie(b.begin, b.end);
  });
  std::uint64_t covered = 0;
  for (const auto& r : ranges) {
    if (r.begin < covered) {
      throw Error(ErrorCode::OverlappingRanges,
                  "data range of tensor '" + *r.name + "' overlaps a previous tensor");
    }
    covered = r.end;
  }
  if (covered != data.size()) {
    malformed("data buffer has " + std::to_string(data.size() - covered) +
              " trailing bytes not owned by any tensor");
  }

  // Decode after validating the layout so errors reflect structure first.
  for (const auto& r : ranges) {
    auto& t = store.tensors.at(*r.name);
    t.values = decode_values(data.data() + r.begin, t.element_count(), t.dtype, *r.name);
  }
  return store;
}

std::vector<std::uint8_t> write_container(const TensorStore& store) {
  json header = json::object();
  std::vector<std::uint8_t> data;
  for (const auto& [name, t] : store.tensors) {
    if (name == kMetadataKey) {
      throw Error(ErrorCode::InvalidArgument, "tensor name __metadata__ is reserved");
    }
    if (t.rank() > kMaxTensorRank) {
      throw Error(ErrorCode::InvalidArgument, "tensor '" + name + "' has rank > 4");
    }
    if (t.element_count() != t.values.size()) {
      throw Error(ErrorCode::InvalidArgument,
                  "tensor '" + name + "' has " + std::to_string(t.values.size()) +
                      " values for shape of " + std::to_string(t.element_count()));
    }
    const std::uint64_t begin = data.size();
    encode_values(data, t);
    header[name] = {{"dtype", dtype_name(t.dtype)},
                    {"shape", t.shape},
                    {"data_offsets", {begin, static_cast<std::uint64_t>(data.size())}}};
  }
  if (!store.metadata.empty()) header[kMetadataKey] = store.metadata;

  std::string text = header.dump();
  text.append((kPrefixBytes - text.size() % kPrefixBytes) % kPrefixBytes, ' ');

  std::vector<std::uint8_t> out;
  out.reserve(kPrefixBytes + text.size() + data.size());
  append_u64_le(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "failed to open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "failed to read '" + path.string() + "'");
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "failed to open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "failed to write '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "failed to rename to '" + path.string() + "': " + ec.message());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

TensorStore load_container(const std::filesystem::path& path) {
  return parse_container(read_file(path));
}

}  // namespace swa
