// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "dtir/config.hpp"

namespace dtir {

// Executes the configured pipeline mode and writes its artifacts plus a
// manifest (one relative path per line) under cfg.out_dir. Returns the
// artifact names in manifest order.
std::vector<std::string> run_framework(const RunConfig& cfg);

}  // namespace dtir
