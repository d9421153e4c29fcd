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

#include "ssrecon/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ssrecon/data_io.hpp"

namespace ssrecon {

namespace {

Sinogram2D scaled(const Sinogram2D& m, double s) {
  Sinogram2D out = m;
  for (double& v : out.data) v *= s;
  out.counts = false;
  return out;
}

// Zeroes ⌊f·size⌋ distinct bins drawn uniformly from the nonzero ones.
std::size_t remove_bins(Sinogram2D& s, Rng& rng, const AugmentConfig& cfg) {
  const double f = cfg.removal_fraction_max * rng.uniform();
  std::size_t k = static_cast<std::size_t>(std::floor(f * static_cast<double>(s.size())));
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.data[i] != 0.0) candidates.push_back(i);
  }
  k = std::min(k, candidates.size());
  for (std::size_t t = 0; t < k; ++t) {
    const auto pick = static_cast<std::size_t>(rng.uniform_int(t, candidates.size() - 1));
    std::swap(candidates[t], candidates[pick]);
    s.data[candidates[t]] = 0.0;
  }
  return k;
}

AugmentSample make_sample(const Sinogram2D& m, const AugmentConfig& cfg, Sinogram2D input,
                          AugmentStrategy strategy, double s) {
  AugmentSample out;
  out.input = std::move(input);
  out.target = cfg.target == AugmentTarget::original ? m : scaled(m, s);
  out.strategy = strategy;
  out.scale = s;
  return out;
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(scale_low >= 0.0) || !(scale_high > scale_low)) {
    throw std::invalid_argument("augmentation scale range must satisfy 0 <= low < high");
  }
  if (!(removal_fraction_max >= 0.0 && removal_fraction_max < 1.0)) {
    throw std::invalid_argument("removal fraction must lie in [0, 1)");
  }
}

std::string_view to_string(AugmentStrategy s) {
  switch (s) {
    case AugmentStrategy::identity: return "identity";
    case AugmentStrategy::rescale_poisson: return "rescale_poisson";
    case AugmentStrategy::rescale_remove: return "rescale_remove";
    case AugmentStrategy::both: return "both";
  }
  return "?";
}

AugmentStrategy draw_strategy(Rng& rng, const AugmentConfig& cfg) {
  if (!cfg.enabled) return AugmentStrategy::identity;
  switch (rng.uniform_int(0, 2)) {
    case 0: return AugmentStrategy::rescale_poisson;
    case 1: return AugmentStrategy::rescale_remove;
    default: return AugmentStrategy::both;
  }
}

double draw_scale(Rng& rng, const AugmentConfig& cfg) {
  // 1 - u lies in (0, 1], so the draw covers (low, high].
  const double s = cfg.scale_low + (cfg.scale_high - cfg.scale_low) * (1.0 - rng.uniform());
  return std::max(s, cfg.scale_floor);
}

AugmentSample augment_rescale_poisson(const Sinogram2D& m, Rng& rng, const AugmentConfig& cfg) {
  const double s = draw_scale(rng, cfg);
  return make_sample(m, cfg, poisson_sample(scaled(m, s), rng), AugmentStrategy::rescale_poisson, s);
}

AugmentSample augment_rescale_remove(const Sinogram2D& m, Rng& rng, const AugmentConfig& cfg) {
  const double s = draw_scale(rng, cfg);
  Sinogram2D input = scaled(m, s);
  const std::size_t removed = remove_bins(input, rng, cfg);
  AugmentSample out = make_sample(m, cfg, std::move(input), AugmentStrategy::rescale_remove, s);
  out.removed = removed;
  return out;
}

AugmentSample augment_both(const Sinogram2D& m, Rng& rng, const AugmentConfig& cfg) {
  const double s = draw_scale(rng, cfg);
  Sinogram2D input = poisson_sample(scaled(m, s), rng);
  const std::size_t removed = remove_bins(input, rng, cfg);
  AugmentSample out = make_sample(m, cfg, std::move(input), AugmentStrategy::both, s);
  out.removed = removed;
  return out;
}

AugmentSample augment(const Sinogram2D& m, Rng& rng, const AugmentConfig& cfg) {
  switch (draw_strategy(rng, cfg)) {
    case AugmentStrategy::rescale_poisson: return augment_rescale_poisson(m, rng, cfg);
    case AugmentStrategy::rescale_remove: return augment_rescale_remove(m, rng, cfg);
    case AugmentStrategy::both: return augment_both(m, rng, cfg);
    case AugmentStrategy::identity: break;
  }
  AugmentSample out;
  out.input = m;
  out.target = m;
  return out;
}

}  // namespace ssrecon
