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
#include <string>
#include <vector>

#include "ssrecon/tensor.hpp"

namespace ssrecon {

// Plain rows×cols array, the payload of a T32 file.
struct Array2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Array2D() = default;
  Array2D(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
};

// n×n activity image, row-major (row index i, column index j).
struct Image2D {
  std::size_t n = 0;
  std::vector<double> data;
  std::string label;

  Image2D() = default;
  explicit Image2D(std::size_t side, double fill = 0.0) : n(side), data(side * side, fill) {}

  double& at(std::size_t i, std::size_t j) { return data[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * n + j]; }
  double sum() const;

  Tensor to_tensor() const { return Tensor(Shape{1, n, n}, data); }
  static Image2D from_tensor(const Tensor& t);
  Array2D to_array() const;
  // Throws GeometryError unless the array is square.
  static Image2D from_array(const Array2D& a);
};

// views×bins projection data, row-major (view a, radial bin b).
struct Sinogram2D {
  std::size_t views = 0;
  std::size_t bins = 0;
  std::vector<double> data;
  bool counts = false;  // values are integer event counts

  Sinogram2D() = default;
  Sinogram2D(std::size_t v, std::size_t r, double fill = 0.0) : views(v), bins(r), data(v * r, fill) {}

  double& at(std::size_t a, std::size_t b) { return data[a * bins + b]; }
  double at(std::size_t a, std::size_t b) const { return data[a * bins + b]; }
  std::size_t size() const { return data.size(); }
  double sum() const;

  Tensor to_tensor() const { return Tensor(Shape{1, views, bins}, data); }
  static Sinogram2D from_tensor(const Tensor& t);
  Array2D to_array() const;
  // Marks the result as counts when every value is a nonnegative integer.
  static Sinogram2D from_array(const Array2D& a);
};

}  // namespace ssrecon
