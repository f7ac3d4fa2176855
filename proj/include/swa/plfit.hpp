// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

// Power-law tail fit for eigenvalue spectra. The exponent is the continuous
// maximum-likelihood estimate above a cutoff x_min, and x_min is chosen among
// the observed eigenvalues to minimize the Kolmogorov-Smirnov distance.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swa/spectral.hpp"

namespace swa {

enum class FitFlag : std::uint8_t {
  AlphaBelow1_5 = 1 << 0,
  AlphaOver6 = 1 << 1,
  ShortTail = 1 << 2,
};

// Empty set means OK.
struct FitFlags {
  std::uint8_t bits = 0;

  bool ok() const { return bits == 0; }
  bool has(FitFlag f) const { return (bits & static_cast<std::uint8_t>(f)) != 0; }
  void set(FitFlag f) { bits |= static_cast<std::uint8_t>(f); }
  // "OK" or names joined by '|'.
  std::string to_string() const;
  std::vector<std::string> names() const;

  friend bool operator==(const FitFlags&, const FitFlags&) = default;
};

enum class PowerLawFamily { Pure };

struct PLFitOptions {
  int min_tail = 5;
  int short_tail = 20;
  double alpha_low = 1.5;
  double alpha_high = 6.0;
  PowerLawFamily family = PowerLawFamily::Pure;
  // OpenMP threads for the x_min scan; 0 uses the runtime default.
  int jobs = 0;
};

struct PLFit {
  double alpha = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double ks_distance = 1.0;
  int n_tail = 0;
  FitFlags flags;

  friend bool operator==(const PLFit&, const PLFit&) = default;
};

// alpha = 1 + n / sum(ln(x_i / x_min)). Throws DegenerateTail when every
// point equals x_min.
double mle_alpha(std::span<const double> tail, double x_min);

// max_i |i/n - P(x_(i))| with P(x) = 1 - (x_min/x)^(alpha-1); `tail` sorted.
double ks_distance(std::span<const double> tail, double x_min, double alpha);

// OpenMP scan over candidate cutoffs.
PLFit fit_power_law(const ESD& esd, const PLFitOptions& opts = {});
PLFit fit_power_law(std::span<const double> ascending, const PLFitOptions& opts = {});

// Single-threaded reference scan; results are bit-identical to fit_power_law.
PLFit fit_power_law_serial(std::span<const double> ascending,
                           const PLFitOptions& opts = {});

}  // namespace swa
