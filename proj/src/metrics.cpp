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

#include "ssrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssrecon/errors.hpp"
#include "ssrecon/system_model.hpp"

namespace ssrecon {

double rmse(const Image2D& x, const Image2D& truth, const Image2D& mask) {
  if (x.n != truth.n || mask.n != truth.n) throw GeometryError("rmse: image sizes differ");
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < truth.data.size(); ++p) {
    if (mask.data[p] <= 0.0) continue;
    const double d = x.data[p] - truth.data[p];
    num += d * d;
    den += truth.data[p] * truth.data[p];
  }
  if (den == 0.0) throw std::invalid_argument("rmse: reference image is zero inside the FOV");
  return 100.0 * std::sqrt(num / den);
}

double rmse(const Image2D& x, const Image2D& truth) {
  const Geometry geom = Geometry::square(truth.n);
  Image2D mask(truth.n);
  for (std::size_t i = 0; i < truth.n; ++i) {
    for (std::size_t j = 0; j < truth.n; ++j) mask.at(i, j) = geom.in_fov(i, j) ? 1.0 : 0.0;
  }
  return rmse(x, truth, mask);
}

double pll(std::span<const double> q, std::span<const double> m) {
  if (q.size() != m.size()) throw GeometryError("pll: model and data sizes differ");
  // Same summation order as the training loss so that pll == -poisson_nll.
  double total_q = 0.0, weighted_log = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    total_q += q[i];
    weighted_log += m[i] * std::log(std::max(q[i], 1e-12));
  }
  return weighted_log - total_q;
}

double pll(const Sinogram2D& q, const Sinogram2D& m) {
  if (q.views != m.views || q.bins != m.bins) throw GeometryError("pll: sinogram shapes differ");
  return pll(std::span<const double>(q.data), std::span<const double>(m.data));
}

}  // namespace ssrecon
