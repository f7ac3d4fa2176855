// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "swa/extraction.hpp"

namespace swa {

struct SpectralConfig {
  // Divide eigenvalues by N, giving the spectrum of (1/N) W^T W.
  bool normalize_by_n = false;
  // Eigenvalues below zero_filter_rel * lambda_max are dropped.
  double zero_filter_rel = 1e-10;
};

// Eigenvalues of X = W^T W for one layer matrix.
struct ESD {
  std::vector<double> eigenvalues;  // ascending, all > 0
  double lambda_max = 0.0;
  int n_dropped = 0;
  // Sum of all eigenvalues before the near-zero filter.
  double trace = 0.0;
  std::string layer_name;
  int layer_id = 0;
  int slice_index = 0;
};

struct Histogram {
  std::vector<double> bin_edges;
  std::vector<long> counts;
  bool log_scaled = false;
};

// Squared singular values of `w`, ascending, unfiltered.
std::vector<double> squared_singular_values(const Eigen::MatrixXd& w,
                                            const std::string& label = {});

ESD compute_esd(const LayerMatrix& matrix, const SpectralConfig& config = {});

// Equal-width bins over [min, max] (log10 domain when log_scaled). Bins are
// left-inclusive; the last bin also includes its right edge.
Histogram esd_histogram(const ESD& esd, int n_bins, bool log_scaled);

}  // namespace swa
