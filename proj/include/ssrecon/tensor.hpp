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

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssrecon {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. A Tensor on its own carries no gradient;
// it only takes part in differentiation once recorded on a Tape.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> values);

  static Tensor scalar(double value) { return Tensor(Shape{1}, {value}); }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t axis) const { return shape.at(axis); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
};

class Tape;
class ParamStore;

// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }
  std::size_t size() const { return value().size(); }
  double item() const;
  bool requires_grad() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records primitive operations in execution order so that a reverse sweep
// can propagate adjoints. Nodes are appended only, so every operand of node k
// has an index below k.
class Tape {
 public:
  // Called during the reverse sweep with the id of the node being processed.
  // Implementations read tape.grad(self) and accumulate into the operands'
  // gradients via tape.accumulate_grad().
  using Adjoint = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf bound to store.at(index); backward() writes its gradient there.
  Var parameter(ParamStore& store, std::size_t index);

  Var record(Tensor value, std::vector<std::size_t> operands, Adjoint adjoint);

  // Zeros every gradient in `store`, runs the reverse sweep from `root`, and
  // adds the gradients of parameter leaves into the store.
  void backward(Var root, ParamStore& store);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::span<const std::size_t> operands(std::size_t id) const { return nodes_.at(id).operands; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient buffer of node `id`; empty when nothing has been accumulated yet.
  std::span<const double> grad(std::size_t id) const { return nodes_.at(id).grad; }
  // Returns a writable gradient buffer for `id`, allocating zeros on first use.
  std::span<double> grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> operands;
    Adjoint adjoint;
    bool requires_grad = false;
    std::optional<std::size_t> param_index;
    std::vector<double> grad;
  };

  std::vector<Node> nodes_;
  const ParamStore* bound_store_ = nullptr;
};

// Linear operator on flat arrays: writes op(in) into out (out is zeroed first).
using LinearFn = std::function<void(std::span<const double> in, std::span<double> out)>;

// ---------------------------------------------------------------------------
// Differentiable primitives. All operands must live on the same Tape.

// Cross-correlation with "same" zero padding. input C_in×H×W,
// weight C_out×C_in×K×K (K odd), bias C_out.
Var conv2d(Var input, Var weight, Var bias);

// out = in for in >= 0, slope_c * in otherwise. `slope` holds either one
// value per channel (dimension 0 of input) or a single shared value.
Var prelu(Var input, Var slope);
Var relu(Var input);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// a / max(b, 1e-12)
Var div(Var a, Var b);
// ln(max(x, 1e-12)); gradient is zero where the clamp is active.
Var ln(Var x);
// Subgradient 0 at exactly 0.
Var abs(Var x);
Var scale(Var x, double factor);
Var sum(Var x);
Var mean(Var x);
Var reshape(Var x, Shape shape);

// y = forward(x), adjoint applied in the reverse sweep. The caller guarantees
// that `adjoint` is the exact transpose of `forward`.
Var linear_map(Var x, Shape out_shape, LinearFn forward, LinearFn adjoint);

inline constexpr double kClampFloor = 1e-12;

}  // namespace ssrecon
