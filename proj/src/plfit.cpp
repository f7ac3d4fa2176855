// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include "swa/plfit.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "swa/error.hpp"

namespace swa {

namespace {

struct Candidate {
  double alpha = 0.0;
  double ks = std::numeric_limits<double>::infinity();
};

void check_options(const PLFitOptions& opts) {
  if (opts.min_tail < 2) throw Error(ErrorCode::InvalidArgument, "min_tail must be >= 2");
}

// Indices of distinct values that leave at least min_tail points and at least
// one point strictly above the cutoff.
std::vector<std::size_t> candidate_indices(std::span<const double> ev, const PLFitOptions& opts) {
  const auto n = ev.size();
  const auto min_tail = static_cast<std::size_t>(opts.min_tail);
  if (n < min_tail) {
    throw Error(ErrorCode::TooFewEigenvalues, "spectrum has " + std::to_string(n) +
                                                  " eigenvalues, fewer than min_tail " +
                                                  std::to_string(min_tail));
  }
  if (!std::is_sorted(ev.begin(), ev.end()) || ev.front() <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "spectrum must be ascending and positive");
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j + min_tail <= n; ++j) {
    if (j > 0 && ev[j] == ev[j - 1]) continue;
    if (ev.back() == ev[j]) break;
    out.push_back(j);
  }
  return out;
}

Candidate evaluate(std::span<const double> ev, std::size_t j) {
  const auto tail = ev.subspan(j);
  Candidate c;
  c.alpha = mle_alpha(tail, ev[j]);
  c.ks = ks_distance(tail, ev[j], c.alpha);
  return c;
}

PLFit finish(std::span<const double> ev, std::size_t j, const Candidate& c, const PLFitOptions& opts) {
  PLFit fit;
  fit.alpha = c.alpha;
  fit.ks_distance = c.ks;
  fit.lambda_min = ev[j];
  fit.lambda_max = ev.back();
  fit.n_tail = static_cast<int>(ev.size() - j);
  if (fit.alpha < opts.alpha_low) fit.flags.set(FitFlag::AlphaBelow1_5);
  if (fit.alpha > opts.alpha_high) fit.flags.set(FitFlag::AlphaOver6);
  if (fit.n_tail < opts.short_tail) fit.flags.set(FitFlag::ShortTail);
  return fit;
}

[[noreturn]] void no_candidates(std::span<const double> ev) {
  throw Error(ErrorCode::DegenerateTail,
              "no usable x_min candidate among " + std::to_string(ev.size()) +
                  " eigenvalues (tail values all equal)");
}

}  // namespace

std::string FitFlags::to_string() const {
  if (ok()) return "OK";
  std::string s;
  for (const auto& n : names()) {
    if (!s.empty()) s += '|';
    s += n;
  }
  return s;
}

std::vector<std::string> FitFlags::names() const {
  if (ok()) return {"OK"};
  std::vector<std::string> out;
  if (has(FitFlag::AlphaBelow1_5)) out.emplace_back("ALPHA_BELOW_1_5");
  if (has(FitFlag::AlphaOver6)) out.emplace_back("ALPHA_OVER_6");
  if (has(FitFlag::ShortTail)) out.emplace_back("SHORT_TAIL");
  return out;
}

double mle_alpha(std::span<const double> tail, double x_min) {
  if (!(x_min > 0.0)) throw Error(ErrorCode::InvalidArgument, "x_min must be positive");
  if (tail.size() < 2) throw Error(ErrorCode::InvalidArgument, "tail needs at least 2 points");
  double log_sum = 0.0;
  for (double x : tail) {
    if (x < x_min) throw Error(ErrorCode::InvalidArgument, "tail point below x_min");
    log_sum += std::log(x / x_min);
  }
  if (log_sum <= 0.0) {
    throw Error(ErrorCode::DegenerateTail, "all tail points equal x_min; alpha is unbounded");
  }
  return 1.0 + static_cast<double>(tail.size()) / log_sum;
}

double ks_distance(std::span<const double> tail, double x_min, double alpha) {
  const auto n = static_cast<double>(tail.size());
  double d = 0.0;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    const double cdf = -std::expm1((alpha - 1.0) * std::log(x_min / tail[i]));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
  }
  return d;
}

PLFit fit_power_law(const ESD& esd, const PLFitOptions& opts) {
  return fit_power_law(std::span<const double>(esd.eigenvalues), opts);
}

PLFit fit_power_law(std::span<const double> ev, const PLFitOptions& opts) {
  check_options(opts);
  const auto idx = candidate_indices(ev, opts);
  if (idx.empty()) no_candidates(ev);

  std::vector<Candidate> results(idx.size());
  const int threads = opts.jobs > 0 ? opts.jobs : omp_get_max_threads();
  const auto count = static_cast<std::ptrdiff_t>(idx.size());
#pragma omp parallel for num_threads(threads) schedule(dynamic, 16) if (count > 64)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    results[static_cast<std::size_t>(k)] = evaluate(ev, idx[static_cast<std::size_t>(k)]);
  }

  // Ascending index order with strict '<' keeps the smallest x_min on ties.
  std::size_t best = 0;
  for (std::size_t k = 1; k < results.size(); ++k) {
    if (results[k].ks < results[best].ks) best = k;
  }
  return finish(ev, idx[best], results[best], opts);
}

PLFit fit_power_law_serial(std::span<const double> ev, const PLFitOptions& opts) {
  check_options(opts);
  const auto idx = candidate_indices(ev, opts);
  if (idx.empty()) no_candidates(ev);

  std::size_t best_j = idx.front();
  Candidate best = evaluate(ev, best_j);
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const Candidate c = evaluate(ev, idx[k]);
    if (c.ks < best.ks) {
      best = c;
      best_j = idx[k];
    }
  }
  return finish(ev, best_j, best, opts);
}

}  // namespace swa
