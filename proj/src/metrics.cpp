// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include "swa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

#include "swa/error.hpp"

namespace swa {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double natural_to_base(double ln_value, LogBase base) {
  return base == LogBase::Ten ? ln_value / std::log(10.0) : ln_value;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Per-unit metric values: one entry per matrix, or per layer when slices are
// averaged first. Alpha fields are absent for units without a fitted slice.
struct Unit {
  double log_frobenius = 0.0;
  double log_spectral = 0.0;
  std::optional<double> alpha, weighted, alpha_norm;
};

std::vector<Unit> build_units(const std::vector<const LayerMetrics*>& included, AveragingUnit mode) {
  std::vector<Unit> units;
  if (mode == AveragingUnit::PerMatrix) {
    for (const auto* l : included) {
      Unit u{l->log_frobenius, l->log_spectral, {}, {}, {}};
      if (l->fit_ok) u.alpha = l->alpha, u.weighted = l->weighted_alpha_term, u.alpha_norm = l->log_alpha_norm;
      units.push_back(u);
    }
    return units;
  }
  // Group by layer_id, keeping first-seen order.
  std::vector<int> order;
  std::map<int, std::vector<const LayerMetrics*>> groups;
  for (const auto* l : included) {
    auto [it, fresh] = groups.try_emplace(l->layer_id);
    if (fresh) order.push_back(l->layer_id);
    it->second.push_back(l);
  }
  for (int id : order) {
    std::vector<double> fro, spec, a, w, an;
    for (const auto* l : groups[id]) {
      fro.push_back(l->log_frobenius);
      spec.push_back(l->log_spectral);
      if (l->fit_ok) a.push_back(l->alpha), w.push_back(l->weighted_alpha_term), an.push_back(l->log_alpha_norm);
    }
    Unit u{mean(fro), mean(spec), {}, {}, {}};
    if (!a.empty()) u.alpha = mean(a), u.weighted = mean(w), u.alpha_norm = mean(an);
    units.push_back(u);
  }
  return units;
}

}  // namespace

std::string_view log_base_name(LogBase base) { return base == LogBase::Ten ? "10" : "e"; }

LogBase parse_log_base(std::string_view name) {
  if (name == "10") return LogBase::Ten;
  if (name == "e") return LogBase::E;
  throw Error(ErrorCode::InvalidArgument, "log base must be 10 or e, got '" + std::string(name) + "'");
}

double log_in_base(double x, LogBase base) {
  return base == LogBase::Ten ? std::log10(x) : std::log(x);
}

std::string_view averaging_unit_name(AveragingUnit unit) {
  return unit == AveragingUnit::PerMatrix ? "per-matrix" : "per-layer";
}

AveragingUnit parse_averaging_unit(std::string_view name) {
  if (name == "per-matrix") return AveragingUnit::PerMatrix;
  if (name == "per-layer") return AveragingUnit::PerLayer;
  throw Error(ErrorCode::InvalidArgument, "unknown averaging unit '" + std::string(name) + "'");
}

LayerMetrics layer_metrics(const ESD& esd, const std::optional<PLFit>& fit, LogBase base) {
  if (esd.eigenvalues.empty()) {
    throw Error(ErrorCode::EmptySpectrum, "empty spectrum for '" + esd.layer_name + "'");
  }
  LayerMetrics m;
  m.layer_name = esd.layer_name;
  m.layer_id = esd.layer_id;
  m.slice_index = esd.slice_index;

  const auto& ev = esd.eigenvalues;
  const double sum = std::accumulate(ev.begin(), ev.end(), 0.0);
  const double lmax = *std::max_element(ev.begin(), ev.end());
  m.log_frobenius = log_in_base(sum, base);
  m.log_spectral = log_in_base(lmax, base);

  if (!fit) {
    m.fit_ok = false;
    m.alpha = m.weighted_alpha_term = m.log_alpha_norm = kNaN;
    return m;
  }
  m.fit_ok = true;
  m.flags = fit->flags;
  m.alpha = fit->alpha;
  m.weighted_alpha_term = m.alpha * m.log_spectral;
  // log sum_i lambda_i^alpha, shifted by the largest term to avoid overflow.
  const double shift = m.alpha * std::log(lmax);
  double scaled = 0.0;
  for (double l : ev) scaled += std::exp(m.alpha * std::log(l) - shift);
  m.log_alpha_norm = natural_to_base(shift + std::log(scaled), base);
  return m;
}

ModelMetrics model_summary(const std::vector<LayerMetrics>& layers, const SummaryConfig& config) {
  ModelMetrics mm;
  std::vector<const LayerMetrics*> included;
  for (const auto& l : layers) {
    if (config.exclude_embedding_like && l.kind == LayerKind::EmbeddingLike) {
      ++mm.n_excluded_embedding;
      continue;
    }
    if (!l.fit_ok) ++mm.n_failed_fit;
    included.push_back(&l);
  }
  if (included.empty()) {
    throw Error(ErrorCode::NoIncludedLayers,
                "no layers left after exclusions (" + std::to_string(layers.size()) + " analyzed)");
  }

  const auto units = build_units(included, config.averaging);
  std::vector<double> fro, spec, alpha, weighted, alpha_norm;
  for (const auto& u : units) {
    fro.push_back(u.log_frobenius);
    spec.push_back(u.log_spectral);
    if (u.alpha) {
      alpha.push_back(*u.alpha);
      weighted.push_back(*u.weighted);
      alpha_norm.push_back(*u.alpha_norm);
    }
  }
  mm.n_layers = static_cast<int>(units.size());
  mm.n_alpha_layers = static_cast<int>(alpha.size());
  mm.avg_log_frobenius = mean(fro);
  mm.avg_log_spectral = mean(spec);
  mm.weighted_alpha = mean(weighted);
  mm.avg_log_alpha_norm = mean(alpha_norm);
  mm.alpha_bar = mean(alpha);
  return mm;
}

ScaleCollapseConfig scale_collapse_in_base(ScaleCollapseConfig c, LogBase base) {
  const double k = base == LogBase::Ten ? 1.0 : std::log(10.0);
  c.single_threshold *= k;
  c.paired_threshold *= k;
  c.paired_median_tolerance *= k;
  return c;
}

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

ScaleCollapseReport detect_scale_collapse(const std::vector<LayerMetrics>& layers,
                                          const std::vector<LayerMetrics>* baseline,
                                          const ScaleCollapseConfig& config) {
  ScaleCollapseReport report;
  report.paired = baseline != nullptr;

  if (!baseline) {
    if (static_cast<int>(layers.size()) < config.min_layers) {
      throw Error(ErrorCode::InsufficientLayers,
                  "scale-collapse detection needs at least " + std::to_string(config.min_layers) +
                      " layers, got " + std::to_string(layers.size()));
    }
    std::vector<double> spec;
    for (const auto& l : layers) spec.push_back(l.log_spectral);
    report.median = median(spec);
    for (const auto& l : layers) {
      const double dev = report.median - l.log_spectral;
      if (dev > config.single_threshold) {
        report.flagged.push_back({l.layer_name, l.slice_index, l.log_spectral, dev});
      }
    }
    report.evaluated = true;
    return report;
  }

  std::map<std::pair<std::string, int>, const LayerMetrics*> base_by_key;
  for (const auto& b : *baseline) base_by_key.emplace(std::make_pair(b.layer_name, b.slice_index), &b);

  std::vector<std::pair<const LayerMetrics*, double>> matched;
  for (const auto& l : layers) {
    const auto it = base_by_key.find({l.layer_name, l.slice_index});
    if (it != base_by_key.end()) matched.emplace_back(&l, l.log_spectral - it->second->log_spectral);
  }
  if (static_cast<int>(matched.size()) < config.min_layers) {
    throw Error(ErrorCode::InsufficientLayers,
                "paired scale-collapse detection needs at least " + std::to_string(config.min_layers) +
                    " matched layers, got " + std::to_string(matched.size()));
  }
  std::vector<double> deltas;
  for (const auto& [l, d] : matched) deltas.push_back(d);
  report.median = median(deltas);
  report.evaluated = true;
  if (std::abs(report.median) >= config.paired_median_tolerance) {
    report.note = "median layer shifted; change is model-wide, not a collapse";
    return report;
  }
  for (const auto& [l, d] : matched) {
    if (-d > config.paired_threshold) {
      report.flagged.push_back({l->layer_name, l->slice_index, l->log_spectral, d});
    }
  }
  return report;
}

}  // namespace swa
