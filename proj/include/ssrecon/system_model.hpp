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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ssrecon/arrays.hpp"
#include "ssrecon/tensor.hpp"

namespace ssrecon {

// n×n image, r radial bins, v views at angles a·π/v.
struct Geometry {
  std::size_t n = 96;
  std::size_t r = 96;
  std::size_t v = 96;

  static Geometry square(std::size_t side) { return Geometry{side, side, side}; }

  void validate() const;
  double angle(std::size_t view) const;
  std::size_t pixels() const { return n * n; }
  std::size_t bins() const { return v * r; }
  // Pixels whose centre lies within radius (r-1)/2 of the image centre.
  bool in_fov(std::size_t i, std::size_t j) const;

  bool operator==(const Geometry&) const = default;
};

// Binary nearest-neighbour x-ray transform. Pixel (i,j) at view a falls in
// bin round(u·cosθ + w·sinθ + (r-1)/2), with u = j-(n-1)/2, w = i-(n-1)/2
// and halves rounded away from zero; bins outside [0, r) are dropped.
//
// Both orientations are precomputed: per-bin pixel lists (CSR, ascending pixel
// index) drive forward projection and per-pixel bin tables (ascending view)
// drive backprojection. The object is immutable after construction.
class SystemMatrix {
 public:
  explicit SystemMatrix(Geometry geometry);

  const Geometry& geometry() const { return geom_; }
  std::size_t nonzeros() const { return row_pixels_.size(); }

  // Bin hit by `pixel` at `view`, or -1.
  std::int32_t bin_of(std::size_t pixel, std::size_t view) const {
    return pixel_bins_[pixel * geom_.v + view];
  }
  std::span<const std::uint32_t> row(std::size_t bin) const {
    return {row_pixels_.data() + row_start_[bin], row_start_[bin + 1] - row_start_[bin]};
  }

  // Flat-array forms; sizes must be n² (image) and v·r (sinogram).
  void forward(std::span<const double> image, std::span<double> sino) const;
  void back(std::span<const double> sino, std::span<double> image) const;

  Sinogram2D forward_project(const Image2D& x) const;
  Image2D back_project(const Sinogram2D& s) const;

  // Aᵀ1
  const Image2D& sensitivity_image() const { return sensitivity_; }
  // AᵀA1 with 1 the all-ones image.
  const Image2D& bpf_sensitivity() const { return bpf_sensitivity_; }
  // 1 inside the FOV circle, 0 outside.
  const Image2D& fov_mask() const { return fov_mask_; }

  // One "view bin row col" line per nonzero entry.
  void export_coo(const std::filesystem::path& path) const;

 private:
  Geometry geom_;
  std::vector<std::int32_t> pixel_bins_;
  std::vector<std::size_t> row_start_;
  std::vector<std::uint32_t> row_pixels_;
  Image2D sensitivity_;
  Image2D bpf_sensitivity_;
  Image2D fov_mask_;
};

// Max over `pairs` uniform random (x, y) of |<Ax,y> - <x,Aᵀy>| / (‖Ax‖·‖y‖).
double adjoint_error(const SystemMatrix& sm, int pairs, std::uint64_t seed);

inline SystemMatrix build_system_matrix(const Geometry& geometry) { return SystemMatrix(geometry); }

// Differentiable projections of tape-recorded tensors (image 1×n×n,
// sinogram 1×v×r). Each uses the other as its adjoint.
Var forward_project(const SystemMatrix& sm, Var image);
Var back_project(const SystemMatrix& sm, Var sino);

// Zero every pixel outside the FOV circle.
void apply_fov_mask(const Geometry& geometry, Image2D& image);

}  // namespace ssrecon
