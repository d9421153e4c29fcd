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
#include <string>
#include <string_view>

#include "ssrecon/arrays.hpp"
#include "ssrecon/params.hpp"
#include "ssrecon/rng.hpp"
#include "ssrecon/system_model.hpp"
#include "ssrecon/tensor.hpp"

namespace ssrecon {

// Positivity function applied at the output of a reconstruction stage.
enum class Positivity { abs, prelu_scalar, relu, none };

// Plain CNN: conv 1→C, then `innermost_layers` convs C→C, then conv C→1,
// with a per-channel PReLU after every convolution except the last.
struct CnnSpec {
  std::size_t channels = 192;
  std::size_t innermost_layers = 4;
  std::size_t kernel = 9;
  Positivity positivity = Positivity::abs;

  void validate() const;
  // (C·K²+C) + L·(C²·K²+C) + (C·K²+1) + (L+1)·C, plus one shared slope when
  // the positivity stage is a scalar PReLU.
  std::size_t parameter_count() const;
};

enum class MethodTag { dl_fbp, dl_fbp_f, dl_bpf, ddl };
enum class BpfLossSpace { sinogram, backprojected };

struct ReconMethod {
  MethodTag tag = MethodTag::dl_fbp;
  CnnSpec spec1;
  std::optional<CnnSpec> spec2;  // image-domain CNN, DL-FBP-F only
  BpfLossSpace bpf_loss_space = BpfLossSpace::sinogram;
  // Take |Ax| when forming the mean data model. Only matters when the
  // reconstructed image itself is not constrained to be nonnegative.
  bool abs_on_projection = true;

  // Defaults: abs positivity for the single-network methods;
  // for DL-FBP-F a scalar PReLU between the stages and the final positivity
  // taken on Ax. For DL-FBP-F `layers` applies to each of the two CNNs.
  static ReconMethod make(MethodTag tag, std::size_t channels, std::size_t layers,
                          std::size_t kernel = 9);

  void validate() const;
  std::size_t parameter_count() const;
  // True when every reconstructed pixel is guaranteed >= 0.
  bool image_nonnegative() const;
};

MethodTag parse_method_tag(std::string_view name);
std::string_view to_string(MethodTag tag);
std::string_view to_string(Positivity p);
std::string_view to_string(BpfLossSpace s);
Positivity parse_positivity(std::string_view name);
BpfLossSpace parse_bpf_loss_space(std::string_view name);

// Fan-in scaled uniform weights, zero biases, PReLU slopes 0.25. Parameter
// names are prefixed with the method tag so that checkpoints identify the
// network they belong to.
ParamStore build_network(const ReconMethod& method, Rng& rng);

// Recovers the method from the parameter names and shapes of a store made by
// build_network (the DL-BPF loss space is not recorded and comes back as
// `sinogram`). Throws std::invalid_argument for unrecognised stores.
ReconMethod infer_method(const ParamStore& store);

// A network's parameters recorded as leaves on one tape.
class BoundNetwork {
 public:
  // With `trainable` false the parameters are recorded as constants and no
  // adjoints are kept (evaluation only).
  BoundNetwork(Tape& tape, ParamStore& store, ReconMethod method, bool trainable = true);

  Tape& tape() const { return *tape_; }
  const ReconMethod& method() const { return method_; }
  Var param(const std::string& name) const;

 private:
  Tape* tape_;
  const ParamStore* store_;
  ReconMethod method_;
  std::vector<Var> vars_;
};

// The convolution/PReLU stack of one CNN (no positivity stage).
Var apply_cnn(const BoundNetwork& net, std::string_view stage, const CnnSpec& spec, Var input);
Var apply_positivity(const BoundNetwork& net, std::string_view stage, Positivity p, Var input);

// x = a(Aᵀ F(m) / Aᵀ1)
Var reconstruct_dl_fbp(const BoundNetwork& net, const SystemMatrix& sm, Var m);
// x = F₂(a(Aᵀ F₁(m) / Aᵀ1))
Var reconstruct_dl_fbp_f(const BoundNetwork& net, const SystemMatrix& sm, Var m);
// x = a(F(Aᵀm) / AᵀA1)
Var reconstruct_dl_bpf(const BoundNetwork& net, const SystemMatrix& sm, Var m);
// x = a(F(m)); needs a square geometry with v = r = n.
Var reconstruct_ddl(const BoundNetwork& net, const SystemMatrix& sm, Var m);
Var reconstruct(const BoundNetwork& net, const SystemMatrix& sm, Var m);

// Every reconstruction is zero outside the FOV circle.

// q = A x, or |A x| when `apply_abs`.
Var forward_model_output(const SystemMatrix& sm, Var x, bool apply_abs);
// Uses the method's positivity convention.
Var forward_model_output(const BoundNetwork& net, const SystemMatrix& sm, Var x);

struct Evaluation {
  Image2D image;
  Sinogram2D mean_data;
};

// Forward pass only.
Evaluation evaluate_network(ParamStore& store, const ReconMethod& method, const SystemMatrix& sm,
                            const Sinogram2D& m);

}  // namespace ssrecon
