// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

// Regenerates the fixtures under tests/fixtures:
//   swa_make_fixtures <dir>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>

#include "swa/format.hpp"
#include "swa/meta_analysis.hpp"
#include "swa/tensor_io.hpp"

namespace {

// Uniform in (0, 1) from raw engine bits, identical on every platform.
double uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Symmetric Pareto-tailed entries (tail index 3), scaled by 1/sqrt(fan_in).
swa::TensorEntry heavy_tailed(std::mt19937_64& rng, std::uint64_t rows, std::uint64_t cols) {
  swa::TensorEntry t;
  t.dtype = swa::DType::F32;
  t.shape = {rows, cols};
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  for (std::uint64_t i = 0; i < rows * cols; ++i) {
    const double magnitude = std::pow(uniform(rng), -1.0 / 3.0) - 1.0;
    const double sign = uniform(rng) < 0.5 ? -1.0 : 1.0;
    t.values.push_back(static_cast<float>(sign * magnitude * scale));
  }
  return t;
}

swa::TensorEntry bias(std::mt19937_64& rng, std::uint64_t n) {
  swa::TensorEntry t;
  t.dtype = swa::DType::F32;
  t.shape = {n};
  for (std::uint64_t i = 0; i < n; ++i) t.values.push_back(static_cast<float>(uniform(rng) - 0.5));
  return t;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "tests/fixtures";
  std::filesystem::create_directories(dir);

  std::mt19937_64 rng(20260214);
  swa::TensorStore store;
  store.metadata["format"] = "pt";
  store.tensors["fc1.weight"] = heavy_tailed(rng, 128, 96);
  store.tensors["fc1.bias"] = bias(rng, 128);
  store.tensors["fc2.weight"] = heavy_tailed(rng, 96, 64);
  store.tensors["fc2.bias"] = bias(rng, 96);
  store.tensors["fc3.weight"] = heavy_tailed(rng, 64, 200);
  store.tensors["fc3.bias"] = bias(rng, 64);
  store.tensors["head.weight"] = heavy_tailed(rng, 10, 64);
  swa::write_file_atomic(dir / "three_layer.safetensors", swa::write_container(store));

  // A synthetic architecture series: every metric rises while the reported
  // top-1 accuracy falls, so each metric is perfectly rank-correlated with error.
  std::string csv = swa::records_csv_header() + "\n";
  const double top1[] = {78.3, 77.1, 76.0, 74.2, 73.3, 71.6};
  for (int i = 0; i < 6; ++i) {
    swa::ModelRecord r;
    r.series = "resnet_like";
    r.model_id = "net" + std::to_string(152 - 20 * i);
    r.reported_top1 = top1[i];
    r.reported_top5 = top1[i] + 15.0;
    r.metrics = {{"log_frobenius", 1.2 + 0.11 * i + 0.01 * i * i},
                 {"log_spectral", 0.8 + 0.07 * i},
                 {"weighted_alpha", 1.5 + 0.2 * i + 0.02 * i * i},
                 {"log_alpha_norm", 1.9 + 0.25 * i},
                 {"alpha_bar", 2.5 + 0.12 * i}};
    for (auto& [name, v] : r.metrics) v = std::round(v * 1e4) / 1e4;
    csv += swa::record_csv_row(r) + "\n";
  }
  swa::write_file_atomic(dir / "monotone_series.csv", csv);
  std::cout << "wrote fixtures to " << dir << "\n";
  return 0;
}
