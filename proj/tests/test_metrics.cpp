// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "swa/error.hpp"
#include "swa/metrics.hpp"

using namespace swa;

namespace {

ESD esd_of(std::vector<double> ev, std::string name = "w") {
  ESD e;
  e.eigenvalues = std::move(ev);
  e.lambda_max = e.eigenvalues.back();
  e.layer_name = std::move(name);
  return e;
}

PLFit fit_with(double alpha) {
  PLFit f;
  f.alpha = alpha;
  return f;
}

LayerMetrics lm(double alpha, double log_spectral, std::string name = "w", int slice = 0) {
  LayerMetrics m;
  m.layer_name = std::move(name);
  m.slice_index = slice;
  m.fit_ok = true;
  m.alpha = alpha;
  m.log_spectral = log_spectral;
  m.log_frobenius = log_spectral + 1.0;
  m.weighted_alpha_term = alpha * log_spectral;
  m.log_alpha_norm = alpha * log_spectral + 0.5;
  return m;
}

std::vector<LayerMetrics> spectra(const std::vector<double>& log_spectral) {
  std::vector<LayerMetrics> out;
  for (std::size_t i = 0; i < log_spectral.size(); ++i) out.push_back(lm(2.0, log_spectral[i], "l" + std::to_string(i)));
  return out;
}

}  // namespace

TEST_CASE("layer_metrics arithmetic") {
  SUBCASE("unit spectrum") {
    const auto m = layer_metrics(esd_of({1, 1, 1, 1}), fit_with(2.0));
    CHECK(m.log_frobenius == doctest::Approx(std::log10(4.0)).epsilon(1e-14));
    CHECK(m.log_spectral == 0.0);
    CHECK(m.weighted_alpha_term == 0.0);
    CHECK(m.log_alpha_norm == doctest::Approx(std::log10(4.0)).epsilon(1e-14));
  }
  SUBCASE("single eigenvalue") {
    const auto m = layer_metrics(esd_of({100}), fit_with(2.0));
    CHECK(m.log_spectral == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(m.weighted_alpha_term == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(m.log_alpha_norm == doctest::Approx(4.0).epsilon(1e-14));
  }
  SUBCASE("alpha norm by direct summation") {
    const auto m = layer_metrics(esd_of({1, 2, 4}), fit_with(1.5));
    const double direct = std::log10(std::pow(1.0, 1.5) + std::pow(2.0, 1.5) + std::pow(4.0, 1.5));
    CHECK(m.log_alpha_norm == doctest::Approx(direct).epsilon(1e-14));
    CHECK(m.log_alpha_norm == doctest::Approx(1.0729).epsilon(1e-4));
  }
  SUBCASE("invariants") {
    const auto m = layer_metrics(esd_of({0.3, 0.9, 2.5, 11.0}), fit_with(2.7));
    CHECK(m.log_spectral <= m.log_frobenius);
    CHECK(m.weighted_alpha_term == m.alpha * m.log_spectral);
  }
  SUBCASE("large exponents do not overflow") {
    const auto m = layer_metrics(esd_of({1e4, 1e5}), fit_with(80.0));
    CHECK(std::isfinite(m.log_alpha_norm));
    CHECK(m.log_alpha_norm == doctest::Approx(400.0).epsilon(1e-6));
  }
  SUBCASE("failed fit") {
    const auto m = layer_metrics(esd_of({1, 2}), std::nullopt);
    CHECK_FALSE(m.fit_ok);
    CHECK(std::isnan(m.alpha));
    CHECK(m.log_spectral == doctest::Approx(std::log10(2.0)));
  }
  SUBCASE("natural log base rescales every log metric by ln 10") {
    const auto e = esd_of({0.3, 0.9, 2.5, 11.0});
    const auto a = layer_metrics(e, fit_with(2.7), LogBase::Ten);
    const auto b = layer_metrics(e, fit_with(2.7), LogBase::E);
    const double k = std::log(10.0);
    CHECK(b.log_frobenius == doctest::Approx(k * a.log_frobenius).epsilon(1e-13));
    CHECK(b.log_spectral == doctest::Approx(k * a.log_spectral).epsilon(1e-13));
    CHECK(b.weighted_alpha_term == doctest::Approx(k * a.weighted_alpha_term).epsilon(1e-13));
    CHECK(b.log_alpha_norm == doctest::Approx(k * a.log_alpha_norm).epsilon(1e-13));
  }
}

TEST_CASE("model_summary averages") {
  SUBCASE("two layers") {
    const auto m = model_summary({lm(2.0, 1.0, "a"), lm(4.0, 2.0, "b")});
    CHECK(m.n_layers == 2);
    CHECK(m.weighted_alpha == doctest::Approx(5.0));
    CHECK(m.alpha_bar == doctest::Approx(3.0));
    CHECK(m.avg_log_spectral == doctest::Approx(1.5));
  }
  SUBCASE("single layer equals the layer") {
    const auto l = lm(2.3, 1.7);
    const auto m = model_summary({l});
    CHECK(m.avg_log_frobenius == l.log_frobenius);
    CHECK(m.avg_log_spectral == l.log_spectral);
    CHECK(m.weighted_alpha == l.weighted_alpha_term);
    CHECK(m.avg_log_alpha_norm == l.log_alpha_norm);
    CHECK(m.alpha_bar == l.alpha);
  }
  SUBCASE("49 layers with a constant exponent") {
    std::vector<LayerMetrics> layers;
    for (int i = 0; i < 49; ++i) layers.push_back(lm(7.01, 1.2, "h" + std::to_string(i)));
    const auto m = model_summary(layers);
    CHECK(m.n_layers == 49);
    CHECK(m.alpha_bar == doctest::Approx(7.01).epsilon(1e-14));
    CHECK(m.weighted_alpha == doctest::Approx(7.01 * 1.2).epsilon(1e-14));
  }
  SUBCASE("embedding and failed-fit exclusions") {
    auto emb = lm(9.0, 5.0, "wte");
    emb.kind = LayerKind::EmbeddingLike;
    auto failed = lm(0.0, 3.0, "dead");
    failed.fit_ok = false;
    const auto m = model_summary({lm(2.0, 1.0, "a"), emb, failed});
    CHECK(m.n_excluded_embedding == 1);
    CHECK(m.n_failed_fit == 1);
    CHECK(m.n_layers == 2);
    CHECK(m.n_alpha_layers == 1);
    CHECK(m.avg_log_spectral == doctest::Approx(2.0));
    CHECK(m.alpha_bar == doctest::Approx(2.0));

    SummaryConfig keep;
    keep.exclude_embedding_like = false;
    CHECK(model_summary({lm(2.0, 1.0, "a"), emb}, keep).alpha_bar == doctest::Approx(5.5));
    CHECK_THROWS_AS(model_summary({emb}), Error);
  }
  SUBCASE("per-layer averaging collapses conv slices first") {
    std::vector<LayerMetrics> layers;
    for (int s = 0; s < 9; ++s) {
      auto l = lm(4.0, 1.0, "conv", s);
      l.layer_id = 0;
      layers.push_back(l);
    }
    auto dense = lm(2.0, 1.0, "fc");
    dense.layer_id = 1;
    layers.push_back(dense);
    CHECK(model_summary(layers).alpha_bar == doctest::Approx(3.8));
    SummaryConfig per_layer;
    per_layer.averaging = AveragingUnit::PerLayer;
    const auto m = model_summary(layers, per_layer);
    CHECK(m.n_layers == 2);
    CHECK(m.alpha_bar == doctest::Approx(3.0));
  }
  SUBCASE("alpha_bar lies within the layer range and a larger layer raises the mean") {
    std::vector<LayerMetrics> layers = {lm(2.1, 1.0, "a"), lm(3.4, 0.5, "b"), lm(2.8, 0.9, "c")};
    const auto before = model_summary(layers);
    CHECK(before.alpha_bar >= 2.1);
    CHECK(before.alpha_bar <= 3.4);
    layers.push_back(lm(before.alpha_bar + 1.0, before.avg_log_spectral + 1.0, "d"));
    const auto after = model_summary(layers);
    CHECK(after.alpha_bar > before.alpha_bar);
    CHECK(after.avg_log_spectral > before.avg_log_spectral);
  }
}

TEST_CASE("detect_scale_collapse") {
  SUBCASE("single model") {
    const auto r = detect_scale_collapse(spectra({2, 2, 2, 2, -1}));
    REQUIRE(r.flagged.size() == 1);
    CHECK(r.flagged[0].layer_name == "l4");
    CHECK(r.flagged[0].deviation == doctest::Approx(3.0));
    CHECK(detect_scale_collapse(spectra({2, 2, 2, 2, 0.5})).flagged.empty());
    CHECK_THROWS_AS(detect_scale_collapse(spectra({2, 2, 2, 2})), Error);
  }
  SUBCASE("paired uniform shift") {
    const auto base = spectra({1, 2, 3, 4, 5, 6});
    auto var = base;
    for (auto& l : var) l.log_spectral += 0.1;
    const auto r = detect_scale_collapse(var, &base);
    CHECK(r.paired);
    CHECK(r.flagged.empty());
    CHECK(r.median == doctest::Approx(0.1));
  }
  SUBCASE("paired two-layer collapse") {
    std::vector<double> v;
    for (int i = 0; i < 20; ++i) v.push_back(1.0 + 0.05 * i);
    const auto base = spectra(v);
    auto var = base;
    for (std::size_t i = 0; i < var.size(); ++i) var[i].log_spectral += 0.1 * std::sin(static_cast<double>(i));
    var[4].log_spectral = base[4].log_spectral - 1.5;
    var[13].log_spectral = base[13].log_spectral - 1.5;
    const auto r = detect_scale_collapse(var, &base);
    REQUIRE(r.flagged.size() == 2);
    CHECK(r.flagged[0].layer_name == "l4");
    CHECK(r.flagged[1].layer_name == "l13");
  }
  SUBCASE("model-wide drop is not a collapse") {
    const auto base = spectra({1, 2, 3, 4, 5, 6});
    auto var = base;
    for (auto& l : var) l.log_spectral -= 2.0;
    const auto r = detect_scale_collapse(var, &base);
    CHECK(r.flagged.empty());
    CHECK_FALSE(r.note.empty());
  }
  SUBCASE("natural-log thresholds") {
    const auto c = scale_collapse_in_base({}, LogBase::E);
    CHECK(c.single_threshold == doctest::Approx(2.0 * std::log(10.0)));
  }
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK(std::isnan(median({})));
}
