// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "csrnet/app.hpp"

int main(int argc, char** argv) { return csrnet::cli_main(argc, argv, std::cout, std::cerr); }
