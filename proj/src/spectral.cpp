// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include "swa/spectral.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "swa/error.hpp"

namespace swa {

std::vector<double> squared_singular_values(const Eigen::MatrixXd& w, const std::string& label) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(w);
  if (svd.info() != Eigen::Success) {
    throw Error(ErrorCode::SvdFailure, "SVD did not converge for layer '" + label + "'");
  }
  const auto& sv = svd.singularValues();
  std::vector<double> out(static_cast<std::size_t>(sv.size()));
  for (Eigen::Index i = 0; i < sv.size(); ++i) out[static_cast<std::size_t>(i)] = sv[i] * sv[i];
  std::sort(out.begin(), out.end());
  return out;
}

ESD compute_esd(const LayerMatrix& matrix, const SpectralConfig& config) {
  const auto& w = matrix.values;
  if (std::min(w.rows(), w.cols()) < 2) {
    throw Error(ErrorCode::InvalidArgument,
                "layer '" + matrix.layer_name + "' needs at least 2 rows and columns");
  }
  if (!w.allFinite()) {
    throw Error(ErrorCode::NonFiniteValue, "layer '" + matrix.layer_name + "' has non-finite entries");
  }
  if ((w.array() == 0.0).all()) {
    throw Error(ErrorCode::AllZeroMatrix, "layer '" + matrix.layer_name + "' is all zeros");
  }

  std::vector<double> lambda = squared_singular_values(w, matrix.layer_name);
  if (config.normalize_by_n) {
    const double n = static_cast<double>(std::max(w.rows(), w.cols()));
    for (auto& l : lambda) l /= n;
  }

  ESD esd;
  esd.layer_name = matrix.layer_name;
  esd.layer_id = matrix.layer_id;
  esd.slice_index = matrix.slice_index;
  esd.trace = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  esd.lambda_max = lambda.back();
  if (esd.lambda_max <= 0.0) {
    throw Error(ErrorCode::AllZeroMatrix, "layer '" + matrix.layer_name + "' has a zero spectrum");
  }
  const double cutoff = config.zero_filter_rel * esd.lambda_max;
  const auto first = std::find_if(lambda.begin(), lambda.end(), [&](double l) { return l >= cutoff; });
  esd.n_dropped = static_cast<int>(first - lambda.begin());
  esd.eigenvalues.assign(first, lambda.end());
  return esd;
}

Histogram esd_histogram(const ESD& esd, int n_bins, bool log_scaled) {
  if (n_bins < 1) throw Error(ErrorCode::InvalidArgument, "n_bins must be >= 1");
  const auto& ev = esd.eigenvalues;
  if (ev.empty()) throw Error(ErrorCode::EmptySpectrum, "empty spectrum for '" + esd.layer_name + "'");

  const auto to_domain = [&](double v) { return log_scaled ? std::log10(v) : v; };
  const auto [mn, mx] = std::minmax_element(ev.begin(), ev.end());
  const double lo = to_domain(*mn), hi = to_domain(*mx);
  const double width = (hi - lo) / n_bins;

  Histogram h;
  h.log_scaled = log_scaled;
  h.bin_edges.resize(static_cast<std::size_t>(n_bins) + 1);
  for (int i = 0; i <= n_bins; ++i) {
    const double e = i == n_bins ? hi : lo + width * i;
    h.bin_edges[static_cast<std::size_t>(i)] = log_scaled ? std::pow(10.0, e) : e;
  }
  // Pin the outer edges to the observed extremes so no value falls outside.
  h.bin_edges.front() = *mn;
  h.bin_edges.back() = *mx;

  h.counts.assign(static_cast<std::size_t>(n_bins), 0);
  for (double v : ev) {
    int idx = width > 0.0 ? static_cast<int>(std::floor((to_domain(v) - lo) / width)) : 0;
    idx = std::clamp(idx, 0, n_bins - 1);
    // Settle rounding at bin boundaries against the published edges.
    while (idx > 0 && v < h.bin_edges[static_cast<std::size_t>(idx)]) --idx;
    while (idx < n_bins - 1 && v >= h.bin_edges[static_cast<std::size_t>(idx) + 1]) ++idx;
    ++h.counts[static_cast<std::size_t>(idx)];
  }
  return h;
}

}  // namespace swa
