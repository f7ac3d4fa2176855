// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include "swa/pipeline.hpp"

#include <omp.h>

#include <cmath>
#include <exception>

#include "swa/error.hpp"

namespace swa {

namespace {

LayerResult analyze_one(const LayerMatrix& m, const AnalysisConfig& config) {
  LayerResult r;
  r.layer_name = m.layer_name;
  r.layer_id = m.layer_id;
  r.kind = m.kind;
  r.slice_index = m.slice_index;
  r.n_rows = static_cast<long>(m.n_rows);
  r.n_cols = static_cast<long>(m.n_cols);
  r.aspect_ratio = m.aspect_ratio;
  r.rescale_factor = m.rescale_factor;

  try {
    r.esd = compute_esd(m, config.spectral);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllZeroMatrix) throw;
    r.skip_reason = "all-zero";
    return r;
  }

  // The x_min scan runs single-threaded here; parallelism is across layers.
  PLFitOptions fit_opts = config.fit;
  fit_opts.jobs = 1;
  try {
    r.fit = fit_power_law(r.esd, fit_opts);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateTail && e.code() != ErrorCode::TooFewEigenvalues) throw;
    r.fit_error = std::string(error_code_name(e.code()));
  }
  r.metrics = layer_metrics(r.esd, r.fit, config.log_base);
  r.metrics.kind = m.kind;
  return r;
}

}  // namespace

std::vector<LayerResult> analyze_matrices(const std::vector<LayerMatrix>& matrices,
                                          const AnalysisConfig& config, int jobs) {
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  const auto n = static_cast<std::ptrdiff_t>(matrices.size());
  std::vector<LayerResult> results(matrices.size());
  std::vector<std::exception_ptr> errors(matrices.size());

#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      results[k] = analyze_one(matrices[k], config);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  // Report the failure of the earliest layer, independent of scheduling.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::vector<LayerResult> analyze_matrices_serial(const std::vector<LayerMatrix>& matrices,
                                                 const AnalysisConfig& config) {
  std::vector<LayerResult> results;
  results.reserve(matrices.size());
  for (const auto& m : matrices) results.push_back(analyze_one(m, config));
  return results;
}

std::vector<LayerMetrics> layer_metrics_of(const AnalysisResult& result) {
  std::vector<LayerMetrics> out;
  for (const auto& l : result.layers) out.push_back(l.metrics);
  return out;
}

AnalysisResult analyze_store(const TensorStore& store, const AnalysisConfig& config, int jobs) {
  auto extracted = extract_layer_matrices(store, config.extraction);

  AnalysisResult result;
  result.model_id = config.extraction.model_id;
  result.skipped = std::move(extracted.skipped);
  for (auto& r : analyze_matrices(extracted.matrices, config, jobs)) {
    if (!r.skip_reason.empty()) {
      std::string name = r.layer_name;
      if (r.kind == LayerKind::Conv2DSlice) name += "#" + std::to_string(r.slice_index);
      result.skipped.push_back({name, r.skip_reason});
      continue;
    }
    result.layers.push_back(std::move(r));
  }
  if (result.layers.empty()) {
    throw Error(ErrorCode::NoAnalyzableLayers, "every extracted matrix was degenerate");
  }

  const auto metrics = layer_metrics_of(result);
  result.model = model_summary(metrics, config.summary);
  for (const auto& s : result.skipped) {
    if (s.reason == "too-small") ++result.model.n_excluded_too_small;
  }

  std::vector<LayerMetrics> included;
  for (const auto& m : metrics) {
    if (!(config.summary.exclude_embedding_like && m.kind == LayerKind::EmbeddingLike)) included.push_back(m);
  }
  const auto collapse = scale_collapse_in_base(config.collapse, config.log_base);
  if (static_cast<int>(included.size()) >= collapse.min_layers) {
    result.model.scale_collapse = detect_scale_collapse(included, nullptr, collapse);
  } else {
    result.model.scale_collapse.note = "fewer than " + std::to_string(collapse.min_layers) +
                                       " included layers; not evaluated";
  }
  return result;
}

}  // namespace swa
