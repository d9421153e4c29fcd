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

#include "ssrecon/mlem.hpp"

#include <algorithm>
#include <stdexcept>

#include "ssrecon/errors.hpp"
#include "ssrecon/metrics.hpp"

namespace ssrecon {

MlemState mlem_init(const SystemMatrix& sm) {
  MlemState state;
  state.x = sm.fov_mask();
  state.x.label = "mlem";
  return state;
}

void mlem_iterate(MlemState& state, const SystemMatrix& sm, const Sinogram2D& m) {
  const Geometry& g = sm.geometry();
  if (m.views != g.v || m.bins != g.r) throw GeometryError("mlem: sinogram does not match geometry");
  if (state.x.n != g.n) throw GeometryError("mlem: estimate does not match geometry");
  for (double v : m.data) {
    if (!(v >= 0.0)) throw std::invalid_argument("mlem: measured data must be nonnegative");
  }

  std::vector<double> ratio(g.bins());
  sm.forward(state.x.data, ratio);
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    ratio[i] = m.data[i] == 0.0 ? 0.0 : m.data[i] / std::max(ratio[i], kClampFloor);
  }
  std::vector<double> correction(g.pixels());
  sm.back(ratio, correction);
  const Image2D& sens = sm.sensitivity_image();
  const Image2D& mask = sm.fov_mask();
  for (std::size_t p = 0; p < g.pixels(); ++p) {
    state.x.data[p] = (mask.data[p] > 0.0 && sens.data[p] > 0.0)
                          ? state.x.data[p] / sens.data[p] * correction[p]
                          : 0.0;
  }
  state.iteration += 1;

  std::vector<double> q(g.bins());
  sm.forward(state.x.data, q);
  state.pll_history.push_back(pll(q, m.data));
}

MlemResult mlem_run(const SystemMatrix& sm, const Sinogram2D& m, int iters) {
  if (iters < 1) throw std::invalid_argument("mlem_run: need at least one iteration");
  MlemState state = mlem_init(sm);
  for (int k = 0; k < iters; ++k) mlem_iterate(state, sm, m);
  return MlemResult{std::move(state.x), std::move(state.pll_history)};
}

}  // namespace ssrecon
