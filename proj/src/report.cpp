// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include "swa/report.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <limits>
#include <map>
#include <memory>

#include "swa/error.hpp"

namespace swa {

using json = nlohmann::json;

namespace {

std::string matrix_key(const std::string& name, LayerKind kind, int slice) {
  return kind == LayerKind::Conv2DSlice ? name + "#" + std::to_string(slice) : name;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error(ErrorCode::Io, "SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

json config_echo(const AnalysisConfig& c) {
  const auto& x = c.extraction;
  json order = json::array();
  std::vector<std::pair<int, std::string>> by_pos;
  for (const auto& [name, pos] : x.explicit_order) by_pos.emplace_back(pos, name);
  std::sort(by_pos.begin(), by_pos.end());
  for (const auto& [pos, name] : by_pos) order.push_back(name);

  return {
      {"extraction",
       {{"min_matrix_dim", x.min_matrix_dim},
        {"include_patterns", x.include_patterns},
        {"exclude_patterns", x.exclude_patterns},
        {"skip_embedding_like", x.skip_embedding_like},
        {"embedding_pattern", x.embedding_pattern},
        {"embedding_min_aspect", x.embedding_min_aspect},
        {"attention_pattern", x.attention_pattern},
        {"conv_layout", conv_layout_name(x.conv_layout)},
        {"conv_rescale", "k/sqrt(2), k = sqrt(kh*kw)"},
        {"explicit_order", order}}},
      {"spectral",
       {{"normalize_by_n", c.spectral.normalize_by_n},
        {"zero_filter_rel", c.spectral.zero_filter_rel},
        {"method", "svd"}}},
      {"fit",
       {{"family", "power_law"},
        {"estimator", "continuous_mle"},
        {"xmin_selection", "min_ks_distance"},
        {"ks_convention", "max_i |i/n - P(x_i)|"},
        {"tie_break", "smallest_xmin"},
        {"min_tail", c.fit.min_tail},
        {"short_tail", c.fit.short_tail},
        {"alpha_low", c.fit.alpha_low},
        {"alpha_high", c.fit.alpha_high}}},
      {"metrics",
       {{"log_base", log_base_name(c.log_base)},
        {"alpha_norm_range", "all_retained_eigenvalues"},
        {"exclude_embedding_like", c.summary.exclude_embedding_like},
        {"averaging_unit", averaging_unit_name(c.summary.averaging)}}},
      {"scale_collapse",
       {{"single_threshold_log10", c.collapse.single_threshold},
        {"paired_threshold_log10", c.collapse.paired_threshold},
        {"paired_median_tolerance_log10", c.collapse.paired_median_tolerance},
        {"min_layers", c.collapse.min_layers}}},
  };
}

std::string layers_csv(const AnalysisResult& result) {
  std::string out = kLayersCsvHeader;
  out += '\n';
  for (const auto& l : result.layers) {
    const auto& m = l.metrics;
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    const double alpha = l.fit ? l.fit->alpha : nan;
    const double lmin = l.fit ? l.fit->lambda_min : nan;
    const double ks = l.fit ? l.fit->ks_distance : nan;
    const std::string flags = l.fit ? l.fit->flags.to_string() : "FIT_FAILED";
    out += std::to_string(l.layer_id) + "," + csv_field(l.layer_name) + "," +
           std::string(layer_kind_name(l.kind)) + "," + std::to_string(l.slice_index) + "," +
           std::to_string(l.n_rows) + "," + std::to_string(l.n_cols) + "," +
           format_double(l.aspect_ratio) + "," + format_double(alpha) + "," + format_double(lmin) +
           "," + format_double(l.esd.lambda_max) + "," + format_double(ks) + "," +
           format_double(m.log_frobenius) + "," + format_double(m.log_spectral) + "," +
           format_double(m.weighted_alpha_term) + "," + format_double(m.log_alpha_norm) + "," +
           flags + "\n";
  }
  return out;
}

json fit_json(const PLFit& fit) {
  return {{"alpha", fit.alpha},
          {"lambda_min", fit.lambda_min},
          {"lambda_max", fit.lambda_max},
          {"ks_distance", fit.ks_distance},
          {"n_tail", fit.n_tail},
          {"flags", fit.flags.names()}};
}

json scale_collapse_json(const ScaleCollapseReport& r) {
  json flagged = json::array();
  for (const auto& f : r.flagged) {
    flagged.push_back({{"layer", f.layer_name},
                       {"slice", f.slice_index},
                       {"log_spectral", f.log_spectral},
                       {"deviation", f.deviation}});
  }
  return {{"mode", r.paired ? "paired" : "single"},
          {"evaluated", r.evaluated},
          {"median", number_or_null(r.median)},
          {"note", r.note},
          {"flagged", flagged}};
}

json model_metrics_json(const ModelMetrics& m) {
  return {{"L", m.n_layers},
          {"L_alpha", m.n_alpha_layers},
          {"avg_log_frobenius", number_or_null(m.avg_log_frobenius)},
          {"avg_log_spectral", number_or_null(m.avg_log_spectral)},
          {"weighted_alpha", number_or_null(m.weighted_alpha)},
          {"avg_log_alpha_norm", number_or_null(m.avg_log_alpha_norm)},
          {"alpha_bar", number_or_null(m.alpha_bar)},
          {"excluded",
           {{"embedding_like", m.n_excluded_embedding},
            {"too_small", m.n_excluded_too_small},
            {"failed_fit", m.n_failed_fit}}}};
}

json analysis_report_json(const AnalysisResult& result, const AnalysisConfig& config,
                          const std::string& input_sha256) {
  json layers = json::array();
  for (const auto& l : result.layers) {
    const auto& m = l.metrics;
    layers.push_back({{"layer_id", l.layer_id},
                      {"name", l.layer_name},
                      {"kind", layer_kind_name(l.kind)},
                      {"slice", l.slice_index},
                      {"N", l.n_rows},
                      {"M", l.n_cols},
                      {"Q", l.aspect_ratio},
                      {"rescale_factor", l.rescale_factor},
                      {"n_eigenvalues", l.esd.eigenvalues.size()},
                      {"n_dropped", l.esd.n_dropped},
                      {"fit", l.fit ? fit_json(*l.fit) : json(nullptr)},
                      {"fit_error", l.fit_error},
                      {"log_frobenius", m.log_frobenius},
                      {"log_spectral", m.log_spectral},
                      {"weighted_alpha_term", number_or_null(m.weighted_alpha_term)},
                      {"log_alpha_norm", number_or_null(m.log_alpha_norm)}});
  }
  json skipped = json::array();
  for (const auto& s : result.skipped) skipped.push_back({{"tensor", s.tensor}, {"reason", s.reason}});

  return {{"tool", "swa"},
          {"tool_version", kToolVersion},
          {"model_id", result.model_id},
          {"input_sha256", input_sha256},
          {"config", config_echo(config)},
          {"model", model_metrics_json(result.model)},
          {"scale_collapse", scale_collapse_json(result.model.scale_collapse)},
          {"layers", layers},
          {"skipped", skipped}};
}

ComparisonResult compare_models(const AnalysisResult& baseline, const AnalysisResult& variant,
                                const ScaleCollapseConfig& config) {
  std::map<std::pair<std::string, int>, const LayerResult*> var_by_key;
  for (const auto& l : variant.layers) var_by_key.emplace(std::make_pair(l.layer_name, l.slice_index), &l);

  ComparisonResult c;
  std::map<std::pair<std::string, int>, bool> matched_keys;
  for (const auto& b : baseline.layers) {
    const auto key = std::make_pair(b.layer_name, b.slice_index);
    const auto it = var_by_key.find(key);
    if (it == var_by_key.end()) {
      c.unmatched_baseline.push_back(matrix_key(b.layer_name, b.kind, b.slice_index));
      continue;
    }
    matched_keys[key] = true;
    const auto& v = *it->second;
    LayerDelta d;
    d.layer_name = b.layer_name;
    d.slice_index = b.slice_index;
    d.log_spectral_baseline = b.metrics.log_spectral;
    d.log_spectral_variant = v.metrics.log_spectral;
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    d.alpha_baseline = b.fit ? b.fit->alpha : nan;
    d.alpha_variant = v.fit ? v.fit->alpha : nan;
    c.deltas.push_back(d);
  }
  for (const auto& v : variant.layers) {
    if (!matched_keys.count({v.layer_name, v.slice_index})) {
      c.unmatched_variant.push_back(matrix_key(v.layer_name, v.kind, v.slice_index));
    }
  }
  if (c.deltas.empty()) throw Error(ErrorCode::NoMatchedLayers, "no layer names match between models");

  const auto base_metrics = layer_metrics_of(baseline);
  c.scale_collapse = detect_scale_collapse(layer_metrics_of(variant), &base_metrics, config);
  c.delta_alpha_bar = variant.model.alpha_bar - baseline.model.alpha_bar;
  return c;
}

json comparison_json(const ComparisonResult& c) {
  json layers = json::array();
  for (const auto& d : c.deltas) {
    layers.push_back({{"name", d.layer_name},
                      {"slice", d.slice_index},
                      {"log_spectral_baseline", d.log_spectral_baseline},
                      {"log_spectral_variant", d.log_spectral_variant},
                      {"delta_log_spectral", d.log_spectral_variant - d.log_spectral_baseline},
                      {"alpha_baseline", number_or_null(d.alpha_baseline)},
                      {"alpha_variant", number_or_null(d.alpha_variant)},
                      {"delta_alpha", number_or_null(d.alpha_variant - d.alpha_baseline)}});
  }
  return {{"tool", "swa"},
          {"tool_version", kToolVersion},
          {"layers", layers},
          {"unmatched_baseline", c.unmatched_baseline},
          {"unmatched_variant", c.unmatched_variant},
          {"delta_alpha_bar", number_or_null(c.delta_alpha_bar)},
          {"scale_collapse", scale_collapse_json(c.scale_collapse)}};
}

json regression_json(const RegressionResult& r) {
  return {{"series", r.series},
          {"metric", r.metric_name},
          {"target", r.target},
          {"direction", r.direction},
          {"n", r.n},
          {"slope", r.slope},
          {"intercept", r.intercept},
          {"rmse", r.rmse},
          {"r2", r.r2},
          {"kendall_tau", r.kendall_tau}};
}

std::string plot_csv(const RegressionResult& r) {
  std::string out = "x,y,y_hat,band_lo,band_hi\n";
  for (const auto& p : r.plot) {
    out += format_double(p.x) + "," + format_double(p.y) + "," + format_double(p.y_hat) + "," +
           format_double(p.band_lo) + "," + format_double(p.band_hi) + "\n";
  }
  return out;
}

}  // namespace swa
