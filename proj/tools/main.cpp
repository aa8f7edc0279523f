// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "stbert/cli/commands.hpp"

int main(int argc, char** argv) {
  return stbert::cli::run_main(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
