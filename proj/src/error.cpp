// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include "swa/error.hpp"

namespace swa {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::OverlappingRanges: return "OverlappingRanges";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NoAnalyzableLayers: return "NoAnalyzableLayers";
    case ErrorCode::DegenerateKernel: return "DegenerateKernel";
    case ErrorCode::SvdFailure: return "SvdFailure";
    case ErrorCode::AllZeroMatrix: return "AllZeroMatrix";
    case ErrorCode::EmptySpectrum: return "EmptySpectrum";
    case ErrorCode::DegenerateTail: return "DegenerateTail";
    case ErrorCode::TooFewEigenvalues: return "TooFewEigenvalues";
    case ErrorCode::NoIncludedLayers: return "NoIncludedLayers";
    case ErrorCode::InsufficientLayers: return "InsufficientLayers";
    case ErrorCode::ConstantPredictor: return "ConstantPredictor";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::AllTied: return "AllTied";
    case ErrorCode::TooFewModels: return "TooFewModels";
    case ErrorCode::MissingMetric: return "MissingMetric";
    case ErrorCode::MixedSeries: return "MixedSeries";
    case ErrorCode::UnknownLayer: return "UnknownLayer";
    case ErrorCode::NoMatchedLayers: return "NoMatchedLayers";
  }
  return "Unknown";
}

}  // namespace swa
