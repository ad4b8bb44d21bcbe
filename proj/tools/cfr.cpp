// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "cfr/pipeline.hpp"

int main(int argc, char** argv) { return cfr::cli_main(argc, argv, std::cout, std::cerr); }
