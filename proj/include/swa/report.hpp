// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swa/format.hpp"
#include "swa/meta_analysis.hpp"
#include "swa/pipeline.hpp"

namespace swa {

inline constexpr const char* kToolVersion = "0.3.0";

std::string sha256_hex(std::span<const std::uint8_t> bytes);

nlohmann::json config_echo(const AnalysisConfig& config);

inline constexpr const char* kLayersCsvHeader =
    "layer_id,name,kind,slice,N,M,Q,alpha,lambda_min,lambda_max,ks_distance,"
    "log_frobenius,log_spectral,weighted_alpha_term,log_alpha_norm,flags";

std::string layers_csv(const AnalysisResult& result);

nlohmann::json fit_json(const PLFit& fit);
nlohmann::json model_metrics_json(const ModelMetrics& m);
nlohmann::json scale_collapse_json(const ScaleCollapseReport& r);

nlohmann::json analysis_report_json(const AnalysisResult& result,
                                    const AnalysisConfig& config,
                                    const std::string& input_sha256);

struct LayerDelta {
  std::string layer_name;
  int slice_index = 0;
  double log_spectral_baseline = 0.0;
  double log_spectral_variant = 0.0;
  double alpha_baseline = 0.0;  // NaN when either fit failed
  double alpha_variant = 0.0;
};

struct ComparisonResult {
  std::vector<LayerDelta> deltas;
  std::vector<std::string> unmatched_baseline;
  std::vector<std::string> unmatched_variant;
  ScaleCollapseReport scale_collapse;
  double delta_alpha_bar = 0.0;
};

// Throws NoMatchedLayers, and InsufficientLayers when fewer than
// config.min_layers layers match.
ComparisonResult compare_models(const AnalysisResult& baseline,
                                const AnalysisResult& variant,
                                const ScaleCollapseConfig& config);

nlohmann::json comparison_json(const ComparisonResult& c);

nlohmann::json regression_json(const RegressionResult& r);
std::string plot_csv(const RegressionResult& r);

}  // namespace swa
