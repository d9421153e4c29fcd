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

#include <optional>
#include <span>
#include <vector>

#include "ssrecon/arrays.hpp"
#include "ssrecon/tensor.hpp"

namespace ssrecon {

struct LossWeights {
  double alpha = 1.0;   // data fidelity on the dataset being reconstructed
  double beta = 0.0;    // unlabelled datasets
  double gamma = 0.0;   // supervised reference pairs
  double lambda = 0.0;  // prior weight inside the data fidelity term

  void validate() const;
};

// −Σ (m ln q − q); bins with m = 0 contribute q. `m` must match q's size.
Var poisson_nll(Var q, std::span<const double> m);
Var poisson_nll(Var q, const Sinogram2D& m);

// Mean of squared differences.
Var mse_loss(Var a, std::span<const double> b);

// Σ over unordered 4-neighbour pairs with both pixels in `mask` of
// (x_p − x_q)². Equivalently half the sum over ordered pairs.
Var quadratic_smoothness_prior(Var x, const Image2D& mask);

// Sum of poisson_nll over the datasets.
Var noref_loss(std::span<const Var> q_list, std::span<const Sinogram2D> m_list);

// Mean over pairs of mse_loss(x_hat, x_ref). Throws on an empty list.
Var ref_loss(std::span<const Var> x_hats, std::span<const Image2D> refs);

struct LossComponents {
  std::optional<Var> data_fidelity;  // poisson_nll on the dataset in hand
  std::optional<Var> prior;
  std::optional<Var> noref;
  std::optional<Var> ref;
};

// α·(D + λ·R) + β·D_noref + γ·D_ref. Components may be omitted only when
// their weight is zero.
Var total_loss(const LossWeights& weights, const LossComponents& parts);

}  // namespace ssrecon
