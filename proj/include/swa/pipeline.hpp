// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

// Per-layer analysis loop: ESD, power-law fit and layer metrics for every
// extracted matrix, then the model-level summary.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swa/extraction.hpp"
#include "swa/metrics.hpp"
#include "swa/plfit.hpp"
#include "swa/spectral.hpp"
#include "swa/tensor_io.hpp"

namespace swa {

struct AnalysisConfig {
  ExtractionConfig extraction;
  SpectralConfig spectral;
  PLFitOptions fit;
  LogBase log_base = LogBase::Ten;
  SummaryConfig summary;
  ScaleCollapseConfig collapse;
};

struct LayerResult {
  std::string layer_name;
  int layer_id = 0;
  LayerKind kind = LayerKind::Dense;
  int slice_index = 0;
  long n_rows = 0;
  long n_cols = 0;
  double aspect_ratio = 1.0;
  double rescale_factor = 1.0;

  ESD esd;
  std::optional<PLFit> fit;
  std::string fit_error;  // empty when the fit succeeded
  LayerMetrics metrics;
  // Set when the matrix could not be analyzed at all (e.g. all zeros).
  std::string skip_reason;
};

struct AnalysisResult {
  std::string model_id;
  std::vector<LayerResult> layers;
  std::vector<SkipRecord> skipped;
  ModelMetrics model;
};

// Layers processed in parallel with `jobs` OpenMP threads (0 = runtime
// default). Output order follows `matrices`.
std::vector<LayerResult> analyze_matrices(const std::vector<LayerMatrix>& matrices,
                                          const AnalysisConfig& config, int jobs = 0);

// Reference loop, one layer after another.
std::vector<LayerResult> analyze_matrices_serial(const std::vector<LayerMatrix>& matrices,
                                                 const AnalysisConfig& config);

AnalysisResult analyze_store(const TensorStore& store, const AnalysisConfig& config,
                             int jobs = 0);

std::vector<LayerMetrics> layer_metrics_of(const AnalysisResult& result);

}  // namespace swa
