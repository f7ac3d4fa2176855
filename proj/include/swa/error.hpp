// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace swa {

enum class ErrorCode {
  InvalidArgument,
  Io,
  MalformedHeader,
  OverlappingRanges,
  UnsupportedDtype,
  NonFiniteValue,
  NoAnalyzableLayers,
  DegenerateKernel,
  SvdFailure,
  AllZeroMatrix,
  EmptySpectrum,
  DegenerateTail,
  TooFewEigenvalues,
  NoIncludedLayers,
  InsufficientLayers,
  ConstantPredictor,
  DegenerateTarget,
  LengthMismatch,
  AllTied,
  TooFewModels,
  MissingMetric,
  MixedSeries,
  UnknownLayer,
  NoMatchedLayers,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace swa
