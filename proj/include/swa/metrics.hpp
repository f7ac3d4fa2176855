// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swa/extraction.hpp"
#include "swa/plfit.hpp"
#include "swa/spectral.hpp"

namespace swa {

enum class LogBase { Ten, E };

std::string_view log_base_name(LogBase base);
LogBase parse_log_base(std::string_view name);
double log_in_base(double x, LogBase base);

struct LayerMetrics {
  std::string layer_name;
  int layer_id = 0;
  int slice_index = 0;
  LayerKind kind = LayerKind::Dense;

  double log_frobenius = 0.0;
  double log_spectral = 0.0;
  // The alpha-dependent fields are NaN when fit_ok is false.
  bool fit_ok = false;
  double alpha = 0.0;
  double weighted_alpha_term = 0.0;
  double log_alpha_norm = 0.0;
  FitFlags flags;
};

// Eigenvalues in `esd` are the retained (filtered) spectrum; `fit` is the
// spectrum's power-law fit, or nullopt when the fit failed.
LayerMetrics layer_metrics(const ESD& esd, const std::optional<PLFit>& fit,
                           LogBase base = LogBase::Ten);

enum class AveragingUnit {
  // Every matrix counts once, so a k x k conv layer contributes k*k entries.
  PerMatrix,
  // Slices of one layer are averaged first.
  PerLayer,
};

std::string_view averaging_unit_name(AveragingUnit unit);
AveragingUnit parse_averaging_unit(std::string_view name);

struct SummaryConfig {
  bool exclude_embedding_like = true;
  AveragingUnit averaging = AveragingUnit::PerMatrix;
};

struct ScaleCollapseConfig {
  // Thresholds in log10 units; callers using another base convert them.
  double single_threshold = 2.0;
  double paired_threshold = 1.0;
  double paired_median_tolerance = 0.25;
  int min_layers = 5;
};

// Converts log10-unit thresholds into `base` units.
ScaleCollapseConfig scale_collapse_in_base(ScaleCollapseConfig config, LogBase base);

struct CollapseFlag {
  std::string layer_name;
  int slice_index = 0;
  double log_spectral = 0.0;
  // Single mode: median - value. Paired mode: variant - baseline.
  double deviation = 0.0;
};

struct ScaleCollapseReport {
  bool paired = false;
  bool evaluated = false;
  std::string note;
  double median = 0.0;  // median log_spectral, or median shift when paired
  std::vector<CollapseFlag> flagged;
};

struct ModelMetrics {
  int n_layers = 0;        // L, matrices in the norm averages
  int n_alpha_layers = 0;  // matrices in the alpha averages
  double avg_log_frobenius = 0.0;
  double avg_log_spectral = 0.0;
  double weighted_alpha = 0.0;
  double avg_log_alpha_norm = 0.0;
  double alpha_bar = 0.0;
  int n_excluded_embedding = 0;
  int n_excluded_too_small = 0;
  int n_failed_fit = 0;
  ScaleCollapseReport scale_collapse;
};

// Throws NoIncludedLayers. Alpha averages are NaN when no included layer has
// a successful fit.
ModelMetrics model_summary(const std::vector<LayerMetrics>& layers,
                           const SummaryConfig& config = {});

// Single-model mode when `baseline` is null; otherwise layers are matched by
// (name, slice). Throws InsufficientLayers.
ScaleCollapseReport detect_scale_collapse(const std::vector<LayerMetrics>& layers,
                                          const std::vector<LayerMetrics>* baseline = nullptr,
                                          const ScaleCollapseConfig& config = {});

double median(std::vector<double> values);

}  // namespace swa
