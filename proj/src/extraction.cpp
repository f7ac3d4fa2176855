// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include "swa/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>

#include "swa/error.hpp"

namespace swa {

namespace {

bool matches_any(const std::vector<std::regex>& patterns, const std::string& name) {
  return std::any_of(patterns.begin(), patterns.end(),
                     [&](const std::regex& re) { return std::regex_search(name, re); });
}

std::vector<std::regex> compile(const std::vector<std::string>& patterns) {
  std::vector<std::regex> out;
  out.reserve(patterns.size());
  for (const auto& p : patterns) {
    try {
      out.emplace_back(p, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::InvalidArgument, "invalid pattern '" + p + "': " + e.what());
    }
  }
  return out;
}

// Row-major (rows x cols) tensor data as a matrix.
Eigen::MatrixXd matrix_from_row_major(const std::vector<double>& v, Eigen::Index rows,
                                      Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  return m;
}

LayerMatrix oriented(std::string name, LayerKind kind, int slice, double rescale,
                     Eigen::MatrixXd values, const std::string& model_id) {
  LayerMatrix lm;
  lm.model_id = model_id;
  lm.layer_name = std::move(name);
  lm.kind = kind;
  lm.slice_index = slice;
  lm.rescale_factor = rescale;
  if (values.rows() < values.cols()) values.transposeInPlace();
  lm.n_rows = values.rows();
  lm.n_cols = values.cols();
  lm.aspect_ratio = static_cast<double>(lm.n_rows) / static_cast<double>(lm.n_cols);
  lm.values = std::move(values);
  return lm;
}

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "Dense";
    case LayerKind::Conv1D: return "Conv1D";
    case LayerKind::Conv2DSlice: return "Conv2D-slice";
    case LayerKind::Attention: return "Attention";
    case LayerKind::EmbeddingLike: return "Embedding-like";
  }
  return "?";
}

std::string_view conv_layout_name(ConvLayout layout) {
  return layout == ConvLayout::OIKK ? "oikk" : "kkio";
}

ConvLayout parse_conv_layout(std::string_view name) {
  if (name == "oikk") return ConvLayout::OIKK;
  if (name == "kkio") return ConvLayout::KKIO;
  throw Error(ErrorCode::InvalidArgument, "unknown conv layout '" + std::string(name) + "'");
}

ConvSlices slice_conv2d(const TensorEntry& tensor, ConvLayout layout) {
  if (tensor.rank() != 4) {
    throw Error(ErrorCode::InvalidArgument, "slice_conv2d needs a rank-4 tensor");
  }
  const auto& s = tensor.shape;
  if (std::any_of(s.begin(), s.end(), [](auto d) { return d == 0; })) {
    throw Error(ErrorCode::DegenerateKernel, "conv tensor has a zero-length axis");
  }
  const auto d0 = static_cast<Eigen::Index>(s[0]), d1 = static_cast<Eigen::Index>(s[1]);
  const auto d2 = static_cast<Eigen::Index>(s[2]), d3 = static_cast<Eigen::Index>(s[3]);
  const auto& v = tensor.values;

  ConvSlices out;
  Eigen::Index n_out, n_in;
  if (layout == ConvLayout::OIKK) {
    n_out = d0, n_in = d1, out.kernel_h = static_cast<int>(d2), out.kernel_w = static_cast<int>(d3);
  } else {
    out.kernel_h = static_cast<int>(d0), out.kernel_w = static_cast<int>(d1), n_in = d2, n_out = d3;
  }
  const double k = std::sqrt(static_cast<double>(out.kernel_h) * out.kernel_w);
  out.rescale_factor = k / std::sqrt(2.0);

  const Eigen::Index kh = out.kernel_h, kw = out.kernel_w;
  out.slices.reserve(static_cast<std::size_t>(kh * kw));
  for (Eigen::Index i = 0; i < kh; ++i) {
    for (Eigen::Index j = 0; j < kw; ++j) {
      Eigen::MatrixXd m(n_out, n_in);
      for (Eigen::Index o = 0; o < n_out; ++o) {
        for (Eigen::Index c = 0; c < n_in; ++c) {
          const Eigen::Index idx = layout == ConvLayout::OIKK
                                       ? ((o * n_in + c) * kh + i) * kw + j
                                       : ((i * kw + j) * n_in + c) * n_out + o;
          m(o, c) = v[static_cast<std::size_t>(idx)] * out.rescale_factor;
        }
      }
      out.slices.push_back(std::move(m));
    }
  }
  return out;
}

ExtractionResult extract_layer_matrices(const TensorStore& store, const ExtractionConfig& config) {
  if (config.min_matrix_dim < 2) {
    throw Error(ErrorCode::InvalidArgument, "min_matrix_dim must be >= 2");
  }
  const auto includes = compile(config.include_patterns);
  const auto excludes = compile(config.exclude_patterns);
  const std::regex embedding_re(config.embedding_pattern, std::regex::ECMAScript | std::regex::icase);
  const std::regex attention_re(config.attention_pattern, std::regex::ECMAScript | std::regex::icase);

  // Name order (std::map), optionally overridden by an explicit depth order;
  // names missing from the order file follow in name order.
  std::vector<const std::pair<const std::string, TensorEntry>*> order;
  for (const auto& kv : store.tensors) order.push_back(&kv);
  if (!config.explicit_order.empty()) {
    std::stable_sort(order.begin(), order.end(), [&](auto* a, auto* b) {
      const auto ia = config.explicit_order.find(a->first);
      const auto ib = config.explicit_order.find(b->first);
      const bool ha = ia != config.explicit_order.end(), hb = ib != config.explicit_order.end();
      if (ha != hb) return ha;
      return ha && ia->second < ib->second;
    });
  }

  ExtractionResult result;
  int next_layer_id = 0;
  const auto min_dim = static_cast<std::uint64_t>(config.min_matrix_dim);
  for (const auto* kv : order) {
    const auto& [name, t] = *kv;
    auto skip = [&](std::string reason) { result.skipped.push_back({name, std::move(reason)}); };

    if (t.rank() < 2) {
      skip("bias-or-scalar");
      continue;
    }
    if (matches_any(excludes, name)) {
      skip("excluded-by-pattern");
      continue;
    }
    if (!includes.empty() && !matches_any(includes, name)) {
      skip("not-included-by-pattern");
      continue;
    }

    if (t.rank() == 2) {
      const auto rows = t.shape[0], cols = t.shape[1];
      if (std::min(rows, cols) < min_dim) {
        skip("too-small");
        continue;
      }
      auto m = matrix_from_row_major(t.values, static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(cols));
      const double q = static_cast<double>(std::max(rows, cols)) / static_cast<double>(std::min(rows, cols));
      LayerKind kind = LayerKind::Dense;
      if (q > config.embedding_min_aspect && std::regex_search(name, embedding_re)) {
        kind = LayerKind::EmbeddingLike;
      } else if (std::regex_search(name, attention_re)) {
        kind = LayerKind::Attention;
      }
      auto lm = oriented(name, kind, 0, 1.0, std::move(m), config.model_id);
      lm.layer_id = next_layer_id++;
      result.matrices.push_back(std::move(lm));
      continue;
    }

    if (t.rank() == 4) {
      const auto& s = t.shape;
      if (std::any_of(s.begin(), s.end(), [](auto d) { return d == 0; })) {
        skip("degenerate-kernel");
        continue;
      }
      const auto channels = config.conv_layout == ConvLayout::OIKK ? std::min(s[0], s[1])
                                                                   : std::min(s[2], s[3]);
      if (channels < min_dim) {
        skip("too-small");
        continue;
      }
      auto conv = slice_conv2d(t, config.conv_layout);
      const int layer_id = next_layer_id++;
      for (std::size_t i = 0; i < conv.slices.size(); ++i) {
        auto lm = oriented(name, LayerKind::Conv2DSlice, static_cast<int>(i), conv.rescale_factor,
                           std::move(conv.slices[i]), config.model_id);
        lm.layer_id = layer_id;
        result.matrices.push_back(std::move(lm));
      }
      continue;
    }

    // (out, in, 1) pointwise Conv1D kernels are a single linear map.
    if (t.rank() == 3 && t.shape[2] == 1) {
      const auto rows = t.shape[0], cols = t.shape[1];
      if (std::min(rows, cols) < min_dim) {
        skip("too-small");
        continue;
      }
      auto lm = oriented(name, LayerKind::Conv1D, 0, 1.0,
                         matrix_from_row_major(t.values, static_cast<Eigen::Index>(rows),
                                               static_cast<Eigen::Index>(cols)),
                         config.model_id);
      lm.layer_id = next_layer_id++;
      result.matrices.push_back(std::move(lm));
      continue;
    }

    skip("unsupported-rank-" + std::to_string(t.rank()));
  }

  if (result.matrices.empty()) {
    throw Error(ErrorCode::NoAnalyzableLayers,
                "no analyzable layer matrices (" + std::to_string(result.skipped.size()) +
                    " tensors skipped)");
  }
  return result;
}

std::map<std::string, int> read_order_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "failed to open order file '" + path + "'");
  std::map<std::string, int> order;
  std::string line;
  int pos = 0;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    order.emplace(line.substr(first, last - first + 1), pos++);
  }
  return order;
}

}  // namespace swa
