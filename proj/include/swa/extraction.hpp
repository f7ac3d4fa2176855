// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swa/tensor_io.hpp"

namespace swa {

enum class LayerKind { Dense, Conv1D, Conv2DSlice, Attention, EmbeddingLike };

std::string_view layer_kind_name(LayerKind kind);

enum class ConvLayout {
  // (out, in, kh, kw), the PyTorch export layout.
  OIKK,
  // (kh, kw, in, out), the TensorFlow/Keras export layout.
  KKIO,
};

std::string_view conv_layout_name(ConvLayout layout);
ConvLayout parse_conv_layout(std::string_view name);

struct LayerMatrix {
  std::string model_id;
  std::string layer_name;
  int layer_id = 0;
  LayerKind kind = LayerKind::Dense;
  int slice_index = 0;
  // Oriented so that n_rows >= n_cols.
  Eigen::Index n_rows = 0;
  Eigen::Index n_cols = 0;
  double aspect_ratio = 1.0;
  double rescale_factor = 1.0;
  Eigen::MatrixXd values;
};

struct ExtractionConfig {
  std::string model_id;
  int min_matrix_dim = 50;
  // ECMAScript regexes, matched with regex_search against tensor names.
  std::vector<std::string> include_patterns;
  std::vector<std::string> exclude_patterns;
  bool skip_embedding_like = true;
  std::string embedding_pattern = "embed|wte|wpe|tok|(^|[._])pos";
  double embedding_min_aspect = 8.0;
  std::string attention_pattern = "attn|attention|q_proj|k_proj|v_proj|query|key|value";
  ConvLayout conv_layout = ConvLayout::OIKK;
  // Optional true-depth ordering: tensor name -> position.
  std::map<std::string, int> explicit_order;
};

struct SkipRecord {
  std::string tensor;
  std::string reason;

  friend bool operator==(const SkipRecord&, const SkipRecord&) = default;
};

struct ExtractionResult {
  std::vector<LayerMatrix> matrices;
  std::vector<SkipRecord> skipped;
};

struct ConvSlices {
  std::vector<Eigen::MatrixXd> slices;  // each (out x in), row-major kernel order
  double rescale_factor = 1.0;
  int kernel_h = 0;
  int kernel_w = 0;
};

// One (out x in) matrix per kernel position, scaled by k/sqrt(2) with
// k = sqrt(kh * kw).
ConvSlices slice_conv2d(const TensorEntry& tensor, ConvLayout layout);

// Throws NoAnalyzableLayers when every tensor is skipped.
ExtractionResult extract_layer_matrices(const TensorStore& store,
                                        const ExtractionConfig& config);

// One tensor name per line; blank lines and '#' comments ignored.
std::map<std::string, int> read_order_file(const std::string& path);

}  // namespace swa
