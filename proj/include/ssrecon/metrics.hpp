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

#include <span>

#include "ssrecon/arrays.hpp"

namespace ssrecon {

// 100·‖x − truth‖₂ / ‖truth‖₂ over pixels inside the FOV circle of a square
// geometry. Throws std::invalid_argument when truth is zero there.
double rmse(const Image2D& x, const Image2D& truth);
// Same with an explicit mask (pixels with mask > 0 count).
double rmse(const Image2D& x, const Image2D& truth, const Image2D& mask);

// Poisson log-likelihood Σ (m ln q − q) with ln clamped at 1e-12 and the
// 0·ln q = 0 convention. This is the metric; the training loss is its negative.
double pll(std::span<const double> q, std::span<const double> m);
double pll(const Sinogram2D& q, const Sinogram2D& m);

}  // namespace ssrecon
