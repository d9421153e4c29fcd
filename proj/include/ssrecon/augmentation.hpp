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

#include <string_view>

#include "ssrecon/arrays.hpp"
#include "ssrecon/rng.hpp"

namespace ssrecon {

enum class AugmentTarget { original, rescaled };

struct AugmentConfig {
  double scale_low = 0.0;    // exclusive
  double scale_high = 10.0;  // inclusive
  double scale_floor = 1e-3;
  double removal_fraction_max = 0.25;
  bool enabled = false;
  // `rescaled` replaces the target by s·m (ablation only).
  AugmentTarget target = AugmentTarget::original;

  void validate() const;
};

enum class AugmentStrategy { identity, rescale_poisson, rescale_remove, both };

std::string_view to_string(AugmentStrategy s);

struct AugmentSample {
  Sinogram2D input;
  Sinogram2D target;
  AugmentStrategy strategy = AugmentStrategy::identity;
  double scale = 1.0;
  std::size_t removed = 0;
};

// Uniform over the three strategies; identity when augmentation is disabled.
AugmentStrategy draw_strategy(Rng& rng, const AugmentConfig& cfg);

// s ~ U(scale_low, scale_high], floored at scale_floor.
double draw_scale(Rng& rng, const AugmentConfig& cfg);

// input = Poisson(s·m)
AugmentSample augment_rescale_poisson(const Sinogram2D& m, Rng& rng, const AugmentConfig& cfg);
// input = s·m with ⌊f·v·r⌋ of its nonzero bins set to 0, f ~ U(0, removal_fraction_max)
AugmentSample augment_rescale_remove(const Sinogram2D& m, Rng& rng, const AugmentConfig& cfg);
// Rescale, Poisson-sample, then remove bins.
AugmentSample augment_both(const Sinogram2D& m, Rng& rng, const AugmentConfig& cfg);

// One training sample: draws a strategy and applies it.
AugmentSample augment(const Sinogram2D& m, Rng& rng, const AugmentConfig& cfg);

}  // namespace ssrecon
