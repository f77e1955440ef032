// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "dtir/tensor.hpp"

namespace dtir {

// PGM (P5) for 1-channel, PPM (P6) for 3-channel; 8-bit, maxval 255,
// row-major. Values outside [0,1] are clipped on write.
void write_image(const std::string& path, const Tensor& chw);
Tensor read_image(const std::string& path);

}  // namespace dtir
