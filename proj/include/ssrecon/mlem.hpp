// Copyright 2026 The ssrecon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include "ssrecon/arrays.hpp"
#include "ssrecon/system_model.hpp"

namespace ssrecon {

struct MlemState {
  Image2D x;
  int iteration = 0;
  std::vector<double> pll_history;
};

// x = 1 inside the FOV circle, 0 outside.
MlemState mlem_init(const SystemMatrix& sm);

// x ← (x / Aᵀ1) · Aᵀ(m / Ax). Bins with Ax = 0 and m = 0 contribute 0; bins
// with Ax = 0 and m > 0 use the clamped denominator 1e-12. Appends the PLL of
// the updated estimate.
void mlem_iterate(MlemState& state, const SystemMatrix& sm, const Sinogram2D& m);

struct MlemResult {
  Image2D image;
  std::vector<double> pll_history;
};

MlemResult mlem_run(const SystemMatrix& sm, const Sinogram2D& m, int iters);

}  // namespace ssrecon
