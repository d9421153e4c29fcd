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

#include "ssrecon/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ssrecon/errors.hpp"

namespace ssrecon {

void LossWeights::validate() const {
  for (double w : {alpha, beta, gamma, lambda}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("loss weights must be finite and >= 0");
  }
  if (!(alpha > 0.0 || beta > 0.0 || gamma > 0.0)) {
    throw std::invalid_argument("at least one of alpha, beta, gamma must be positive");
  }
}

Var poisson_nll(Var q, std::span<const double> m) {
  if (m.size() != q.size()) {
    throw GeometryError("poisson_nll: " + std::to_string(m.size()) + " data bins for model of " +
                        shape_string(q.shape()));
  }
  for (double v : m) {
    if (!(v >= 0.0)) throw std::invalid_argument("poisson_nll: measured data must be nonnegative");
  }
  Tape& tape = *q.tape();
  Var data = tape.constant(Tensor(q.shape(), std::vector<double>(m.begin(), m.end())));
  return sub(sum(q), sum(mul(data, ln(q))));
}

Var poisson_nll(Var q, const Sinogram2D& m) { return poisson_nll(q, std::span<const double>(m.data)); }

Var mse_loss(Var a, std::span<const double> b) {
  if (b.size() != a.size()) throw GeometryError("mse_loss: operand sizes differ");
  Var target = a.tape()->constant(Tensor(a.shape(), std::vector<double>(b.begin(), b.end())));
  Var d = sub(a, target);
  return mean(mul(d, d));
}

Var quadratic_smoothness_prior(Var x, const Image2D& mask) {
  const std::size_t n = mask.n;
  if (x.size() != n * n) throw GeometryError("smoothness prior: image and mask sizes differ");
  // Each pair (p, q) stored once: right and down neighbours.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t p = i * n + j;
      if (mask.data[p] <= 0.0) continue;
      if (j + 1 < n && mask.data[p + 1] > 0.0) pairs.emplace_back(p, p + 1);
      if (i + 1 < n && mask.data[p + n] > 0.0) pairs.emplace_back(p, p + n);
    }
  }
  const auto& v = x.value().data;
  double acc = 0.0;
  for (const auto& [p, q] : pairs) acc += (v[p] - v[q]) * (v[p] - v[q]);
  const std::size_t x_id = x.id();
  return x.tape()->record(Tensor::scalar(acc), {x_id},
                          [x_id, pairs = std::move(pairs)](Tape& t, std::size_t self) {
                            const double g = t.grad(self)[0];
                            const auto& v = t.value(x_id).data;
                            auto gx = t.grad_buffer(x_id);
                            for (const auto& [p, q] : pairs) {
                              const double d = 2.0 * g * (v[p] - v[q]);
                              gx[p] += d;
                              gx[q] -= d;
                            }
                          });
}

Var noref_loss(std::span<const Var> q_list, std::span<const Sinogram2D> m_list) {
  if (q_list.size() != m_list.size()) throw std::invalid_argument("noref_loss: list lengths differ");
  if (q_list.empty()) throw std::invalid_argument("noref_loss: no datasets");
  Var total = poisson_nll(q_list[0], m_list[0]);
  for (std::size_t k = 1; k < q_list.size(); ++k) total = add(total, poisson_nll(q_list[k], m_list[k]));
  return total;
}

Var ref_loss(std::span<const Var> x_hats, std::span<const Image2D> refs) {
  if (x_hats.size() != refs.size()) throw std::invalid_argument("ref_loss: list lengths differ");
  if (x_hats.empty()) throw std::invalid_argument("ref_loss: no reference pairs supplied");
  Var total = mse_loss(x_hats[0], refs[0].data);
  for (std::size_t k = 1; k < x_hats.size(); ++k) total = add(total, mse_loss(x_hats[k], refs[k].data));
  return scale(total, 1.0 / static_cast<double>(x_hats.size()));
}

Var total_loss(const LossWeights& weights, const LossComponents& parts) {
  weights.validate();
  std::vector<Var> terms;
  if (weights.alpha > 0.0) {
    if (!parts.data_fidelity) throw std::invalid_argument("alpha > 0 but no data fidelity term");
    Var rec = *parts.data_fidelity;
    if (weights.lambda > 0.0) {
      if (!parts.prior) throw std::invalid_argument("lambda > 0 but no prior term");
      rec = add(rec, scale(*parts.prior, weights.lambda));
    }
    terms.push_back(scale(rec, weights.alpha));
  }
  if (weights.beta > 0.0) {
    if (!parts.noref) throw std::invalid_argument("beta > 0 but no unlabelled-data term");
    terms.push_back(scale(*parts.noref, weights.beta));
  }
  if (weights.gamma > 0.0) {
    if (!parts.ref) throw std::invalid_argument("gamma > 0 but no reference term");
    terms.push_back(scale(*parts.ref, weights.gamma));
  }
  Var total = terms[0];
  for (std::size_t k = 1; k < terms.size(); ++k) total = add(total, terms[k]);
  return total;
}

}  // namespace ssrecon
