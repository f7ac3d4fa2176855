// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

// Regression of model-level metrics against reported accuracies over one
// architecture series.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace swa {

struct ModelRecord {
  std::string series;
  std::string model_id;
  std::optional<double> reported_top1;  // accuracy, percent
  std::optional<double> reported_top5;
  std::map<std::string, double> metrics;
};

inline const std::vector<std::string>& regression_metric_names() {
  static const std::vector<std::string> names = {
      "log_frobenius", "log_spectral", "weighted_alpha", "log_alpha_norm", "alpha_bar"};
  return names;
}

// The four columns of the per-series comparison table.
inline const std::vector<std::string>& table_metric_names() {
  static const std::vector<std::string> names = {
      "log_frobenius", "log_spectral", "weighted_alpha", "log_alpha_norm"};
  return names;
}

enum class Target { Top1Error, Top1Acc, Top5Error };
std::string_view target_name(Target t);
Target parse_target(std::string_view name);

enum class Direction {
  TargetOnMetric,  // y = target, x = metric
  MetricOnTarget,
};
std::string_view direction_name(Direction d);
Direction parse_direction(std::string_view name);

struct OlsResult {
  double slope = 0.0;
  double intercept = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
};

OlsResult ols_regression(std::span<const double> x, std::span<const double> y);

// Tie-corrected tau-b. Throws AllTied.
double kendall_tau(std::span<const double> x, std::span<const double> y);

struct PlotPoint {
  std::string model_id;
  double x = 0.0;
  double y = 0.0;
  double y_hat = 0.0;
  double band_lo = 0.0;
  double band_hi = 0.0;
};

struct RegressionResult {
  std::string series;
  std::string metric_name;
  std::string target;
  std::string direction;
  int n = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  double kendall_tau = 0.0;
  std::vector<PlotPoint> plot;  // sorted by x, then model_id
};

struct EvaluateOptions {
  Direction direction = Direction::TargetOnMetric;
  std::vector<std::string> exclude_models;
  double confidence = 0.95;
};

// Records must all belong to one series (MixedSeries otherwise).
RegressionResult evaluate_metric(std::vector<ModelRecord> records,
                                 const std::string& metric_name, Target target,
                                 const EvaluateOptions& options = {});

std::vector<ModelRecord> read_records_csv(const std::filesystem::path& path);
std::vector<ModelRecord> parse_records_csv(std::string_view text);

std::string records_csv_header();
std::string record_csv_row(const ModelRecord& record);

// Groups by series name.
std::map<std::string, std::vector<ModelRecord>> split_by_series(
    const std::vector<ModelRecord>& records);

}  // namespace swa
