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

#include "ssrecon/arrays.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssrecon/errors.hpp"

namespace ssrecon {

double Image2D::sum() const { return std::accumulate(data.begin(), data.end(), 0.0); }

Image2D Image2D::from_tensor(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 1 || t.dim(1) != t.dim(2)) {
    throw GeometryError("tensor " + shape_string(t.shape) + " is not a 1×n×n image");
  }
  Image2D img(t.dim(1));
  img.data = t.data;
  return img;
}

Array2D Image2D::to_array() const {
  Array2D a(n, n);
  a.data = data;
  return a;
}

Image2D Image2D::from_array(const Array2D& a) {
  if (a.rows != a.cols) {
    throw GeometryError("image must be square, got " + std::to_string(a.rows) + "x" +
                        std::to_string(a.cols));
  }
  Image2D img(a.rows);
  img.data = a.data;
  return img;
}

double Sinogram2D::sum() const { return std::accumulate(data.begin(), data.end(), 0.0); }

Sinogram2D Sinogram2D::from_tensor(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 1) {
    throw GeometryError("tensor " + shape_string(t.shape) + " is not a 1×views×bins sinogram");
  }
  Sinogram2D s(t.dim(1), t.dim(2));
  s.data = t.data;
  return s;
}

Array2D Sinogram2D::to_array() const {
  Array2D a(views, bins);
  a.data = data;
  return a;
}

Sinogram2D Sinogram2D::from_array(const Array2D& a) {
  Sinogram2D s(a.rows, a.cols);
  s.data = a.data;
  s.counts = std::all_of(s.data.begin(), s.data.end(),
                         [](double v) { return v >= 0.0 && std::floor(v) == v; });
  return s;
}

}  // namespace ssrecon
