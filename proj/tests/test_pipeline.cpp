// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>

#include "stores.hpp"
#include "swa/error.hpp"
#include "swa/pipeline.hpp"
#include "swa/report.hpp"

using namespace swa;

namespace {

bool same_bits(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return std::memcmp(&a, &b, sizeof a) == 0;
}

}  // namespace

TEST_CASE("parallel analysis matches the serial reference bit for bit") {
  const auto store = testing::heavy_store(7, 9);
  AnalysisConfig cfg;
  const auto matrices = extract_layer_matrices(store, cfg.extraction).matrices;
  const auto ref = analyze_matrices_serial(matrices, cfg);
  for (int jobs : {1, 2, 4, 8}) {
    const auto par = analyze_matrices(matrices, cfg, jobs);
    REQUIRE(par.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(par[i].layer_name == ref[i].layer_name);
      CHECK(par[i].esd.eigenvalues == ref[i].esd.eigenvalues);
      REQUIRE(par[i].fit.has_value() == ref[i].fit.has_value());
      if (ref[i].fit) {
        CHECK(same_bits(par[i].fit->alpha, ref[i].fit->alpha));
        CHECK(same_bits(par[i].fit->lambda_min, ref[i].fit->lambda_min));
        CHECK(same_bits(par[i].fit->ks_distance, ref[i].fit->ks_distance));
      }
      CHECK(same_bits(par[i].metrics.log_alpha_norm, ref[i].metrics.log_alpha_norm));
    }
  }
}

TEST_CASE("analyze_store") {
  AnalysisConfig cfg;
  SUBCASE("all-zero matrices are reported, not fatal") {
    auto store = testing::heavy_store(3, 5);
    store.tensors["layer02"].values.assign(store.tensors["layer02"].values.size(), 0.0);
    const auto r = analyze_store(store, cfg, 2);
    CHECK(r.layers.size() == 4);
    bool found = false;
    for (const auto& s : r.skipped) found |= (s.tensor == "layer02" && s.reason == "all-zero");
    CHECK(found);
  }
  SUBCASE("too-small tensors are counted") {
    auto store = testing::heavy_store(3, 5);
    std::mt19937_64 rng(1);
    store.tensors["tiny"] = testing::heavy_tensor(rng, 10, 64);
    const auto r = analyze_store(store, cfg, 1);
    CHECK(r.model.n_excluded_too_small == 1);
    CHECK(r.model.n_layers == 5);
  }
  SUBCASE("single-mode scale collapse needs five layers") {
    const auto few = analyze_store(testing::heavy_store(3, 4), cfg, 1);
    CHECK_FALSE(few.model.scale_collapse.evaluated);
    CHECK_FALSE(few.model.scale_collapse.note.empty());
    const auto many = analyze_store(testing::heavy_store(3, 6), cfg, 1);
    CHECK(many.model.scale_collapse.evaluated);
  }
  SUBCASE("rescaling one tensor shifts only the norm metrics") {
    const auto store = testing::heavy_store(11, 6);
    const auto base = analyze_store(store, cfg, 1);
    for (double c : {1e-2, 1e3}) {
      auto scaled = store;
      testing::scale_tensor(scaled.tensors["layer03"], c);
      const auto r = analyze_store(scaled, cfg, 1);
      const auto& a = base.layers[3];
      const auto& b = r.layers[3];
      REQUIRE(a.fit.has_value());
      REQUIRE(b.fit.has_value());
      CHECK(b.fit->alpha == doctest::Approx(a.fit->alpha).epsilon(1e-9));
      CHECK(b.metrics.log_spectral - a.metrics.log_spectral == doctest::Approx(2 * std::log10(c)).epsilon(1e-9));
      CHECK(b.metrics.weighted_alpha_term - a.metrics.weighted_alpha_term ==
            doctest::Approx(2 * a.fit->alpha * std::log10(c)).epsilon(1e-7));
      CHECK(r.layers[2].metrics.log_spectral == base.layers[2].metrics.log_spectral);
    }
  }
  SUBCASE("nothing analyzable") {
    TensorStore s;
    s.tensors["b"] = {DType::F32, {10}, std::vector<double>(10, 1.0)};
    CHECK_THROWS_AS(analyze_store(s, cfg), Error);
  }
}

TEST_CASE("compare_models") {
  AnalysisConfig cfg;
  const auto store = testing::heavy_store(5, 8);
  const auto base = analyze_store(store, cfg, 1);
  SUBCASE("self comparison") {
    const auto c = compare_models(base, base, cfg.collapse);
    CHECK(c.deltas.size() == 8);
    CHECK(c.scale_collapse.flagged.empty());
    CHECK(c.delta_alpha_bar == 0.0);
  }
  SUBCASE("one collapsed tensor") {
    auto v = store;
    testing::scale_tensor(v.tensors["layer05"], 0.01);
    const auto c = compare_models(base, analyze_store(v, cfg, 1), cfg.collapse);
    REQUIRE(c.scale_collapse.flagged.size() == 1);
    CHECK(c.scale_collapse.flagged[0].layer_name == "layer05");
    CHECK(c.scale_collapse.flagged[0].deviation == doctest::Approx(-4.0).epsilon(1e-9));
  }
  SUBCASE("unmatched layers are listed") {
    auto v = store;
    v.tensors.erase("layer01");
    std::mt19937_64 rng(2);
    v.tensors["extra"] = testing::heavy_tensor(rng, 64, 64);
    const auto c = compare_models(base, analyze_store(v, cfg, 1), cfg.collapse);
    CHECK(c.unmatched_baseline == std::vector<std::string>{"layer01"});
    CHECK(c.unmatched_variant == std::vector<std::string>{"extra"});
  }
  SUBCASE("no shared layers") {
    TensorStore other;
    std::mt19937_64 rng(2);
    other.tensors["zzz"] = testing::heavy_tensor(rng, 64, 64);
    CHECK_THROWS_AS(compare_models(base, analyze_store(other, cfg, 1), cfg.collapse), Error);
  }
}

TEST_CASE("layers CSV layout") {
  const auto r = analyze_store(testing::heavy_store(5, 2), AnalysisConfig{}, 1);
  const auto csv = layers_csv(r);
  CHECK(csv.rfind(std::string(kLayersCsvHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
