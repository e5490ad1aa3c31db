// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#include "photoapp/cli.hpp"

int main(int argc, char** argv) { return photoapp::cli::run(argc, argv); }
