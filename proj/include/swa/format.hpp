// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace swa {

// Shortest decimal form that round-trips; empty for NaN.
std::string format_double(double v);

// Quotes the field when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);

// Splits one CSV line, honoring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace swa
