// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "swa/cli.hpp"

int main(int argc, char** argv) {
  return swa::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
