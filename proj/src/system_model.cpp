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

#include "ssrecon/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "ssrecon/errors.hpp"
#include "ssrecon/rng.hpp"

namespace ssrecon {

void Geometry::validate() const {
  if (n == 0 || r == 0 || v == 0) throw GeometryError("geometry extents must be positive");
  if (n > 4096 || r > 4096 || v > 4096) throw std::invalid_argument("geometry extents above 4096");
}

double Geometry::angle(std::size_t view) const {
  return static_cast<double>(view) * std::numbers::pi / static_cast<double>(v);
}

bool Geometry::in_fov(std::size_t i, std::size_t j) const {
  const double c = (static_cast<double>(n) - 1.0) / 2.0;
  const double radius = (static_cast<double>(r) - 1.0) / 2.0;
  const double du = static_cast<double>(j) - c;
  const double dw = static_cast<double>(i) - c;
  return du * du + dw * dw <= radius * radius;
}

SystemMatrix::SystemMatrix(Geometry geometry) : geom_(geometry) {
  geom_.validate();
  const std::size_t n = geom_.n, v = geom_.v, r = geom_.r;
  const double centre = (static_cast<double>(n) - 1.0) / 2.0;
  const double offset = (static_cast<double>(r) - 1.0) / 2.0;

  std::vector<double> cos_t(v), sin_t(v);
  for (std::size_t a = 0; a < v; ++a) {
    cos_t[a] = std::cos(geom_.angle(a));
    sin_t[a] = std::sin(geom_.angle(a));
  }

  pixel_bins_.assign(n * n * v, -1);
  std::vector<std::size_t> counts(v * r + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = static_cast<double>(i) - centre;
    for (std::size_t j = 0; j < n; ++j) {
      const double u = static_cast<double>(j) - centre;
      const std::size_t p = i * n + j;
      for (std::size_t a = 0; a < v; ++a) {
        const double b = std::round(u * cos_t[a] + w * sin_t[a] + offset);
        if (b >= 0.0 && b < static_cast<double>(r)) {
          const auto bin = static_cast<std::int32_t>(b);
          pixel_bins_[p * v + a] = bin;
          ++counts[a * r + static_cast<std::size_t>(bin) + 1];
        }
      }
    }
  }

  row_start_.assign(v * r + 1, 0);
  for (std::size_t k = 1; k <= v * r; ++k) row_start_[k] = row_start_[k - 1] + counts[k];
  row_pixels_.resize(row_start_.back());
  std::vector<std::size_t> fill(row_start_.begin(), row_start_.end() - 1);
  for (std::size_t p = 0; p < n * n; ++p) {
    for (std::size_t a = 0; a < v; ++a) {
      const std::int32_t b = pixel_bins_[p * v + a];
      if (b >= 0) row_pixels_[fill[a * r + static_cast<std::size_t>(b)]++] = static_cast<std::uint32_t>(p);
    }
  }

  sensitivity_ = back_project(Sinogram2D(v, r, 1.0));
  sensitivity_.label = "sensitivity";
  bpf_sensitivity_ = back_project(forward_project(Image2D(n, 1.0)));
  bpf_sensitivity_.label = "bpf_sensitivity";
  fov_mask_ = Image2D(n);
  fov_mask_.label = "fov_mask";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) fov_mask_.at(i, j) = geom_.in_fov(i, j) ? 1.0 : 0.0;
  }
}

void SystemMatrix::forward(std::span<const double> image, std::span<double> sino) const {
  if (image.size() != geom_.pixels() || sino.size() != geom_.bins()) {
    throw GeometryError("forward projection: expected image of " + std::to_string(geom_.pixels()) +
                        " pixels and sinogram of " + std::to_string(geom_.bins()) + " bins");
  }
  for (std::size_t k = 0; k < geom_.bins(); ++k) {
    double acc = 0.0;
    for (std::size_t q = row_start_[k]; q < row_start_[k + 1]; ++q) acc += image[row_pixels_[q]];
    sino[k] = acc;
  }
}

void SystemMatrix::back(std::span<const double> sino, std::span<double> image) const {
  if (image.size() != geom_.pixels() || sino.size() != geom_.bins()) {
    throw GeometryError("backprojection: expected sinogram of " + std::to_string(geom_.bins()) +
                        " bins and image of " + std::to_string(geom_.pixels()) + " pixels");
  }
  const std::size_t v = geom_.v, r = geom_.r;
  for (std::size_t p = 0; p < geom_.pixels(); ++p) {
    const std::int32_t* bins = pixel_bins_.data() + p * v;
    double acc = 0.0;
    for (std::size_t a = 0; a < v; ++a) {
      if (bins[a] >= 0) acc += sino[a * r + static_cast<std::size_t>(bins[a])];
    }
    image[p] = acc;
  }
}

Sinogram2D SystemMatrix::forward_project(const Image2D& x) const {
  if (x.n != geom_.n) {
    throw GeometryError("image is " + std::to_string(x.n) + "x" + std::to_string(x.n) +
                        ", geometry expects " + std::to_string(geom_.n));
  }
  Sinogram2D s(geom_.v, geom_.r);
  forward(x.data, s.data);
  return s;
}

Image2D SystemMatrix::back_project(const Sinogram2D& s) const {
  if (s.views != geom_.v || s.bins != geom_.r) {
    throw GeometryError("sinogram is " + std::to_string(s.views) + "x" + std::to_string(s.bins) +
                        ", geometry expects " + std::to_string(geom_.v) + "x" +
                        std::to_string(geom_.r));
  }
  Image2D x(geom_.n);
  back(s.data, x.data);
  return x;
}

void SystemMatrix::export_coo(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t k = 0; k < geom_.bins(); ++k) {
    for (std::uint32_t p : row(k)) {
      out << k / geom_.r << ' ' << k % geom_.r << ' ' << p / geom_.n << ' ' << p % geom_.n << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Var forward_project(const SystemMatrix& sm, Var image) {
  const Geometry& g = sm.geometry();
  if (image.shape() != Shape{1, g.n, g.n}) {
    throw GeometryError("forward_project: expected image " + shape_string({1, g.n, g.n}) +
                        ", got " + shape_string(image.shape()));
  }
  return linear_map(
      image, Shape{1, g.v, g.r},
      [&sm](std::span<const double> in, std::span<double> out) { sm.forward(in, out); },
      [&sm](std::span<const double> in, std::span<double> out) { sm.back(in, out); });
}

Var back_project(const SystemMatrix& sm, Var sino) {
  const Geometry& g = sm.geometry();
  if (sino.shape() != Shape{1, g.v, g.r}) {
    throw GeometryError("back_project: expected sinogram " + shape_string({1, g.v, g.r}) +
                        ", got " + shape_string(sino.shape()));
  }
  return linear_map(
      sino, Shape{1, g.n, g.n},
      [&sm](std::span<const double> in, std::span<double> out) { sm.back(in, out); },
      [&sm](std::span<const double> in, std::span<double> out) { sm.forward(in, out); });
}

void apply_fov_mask(const Geometry& geometry, Image2D& image) {
  if (image.n != geometry.n) throw GeometryError("apply_fov_mask: image size mismatch");
  for (std::size_t i = 0; i < image.n; ++i) {
    for (std::size_t j = 0; j < image.n; ++j) {
      if (!geometry.in_fov(i, j)) image.at(i, j) = 0.0;
    }
  }
}

double adjoint_error(const SystemMatrix& sm, int pairs, std::uint64_t seed) {
  if (pairs < 1) throw std::invalid_argument("adjoint_error: need at least one pair");
  const Geometry& g = sm.geometry();
  Rng rng(seed);
  std::vector<double> x(g.pixels()), y(g.bins()), ax(g.bins()), aty(g.pixels());
  double worst = 0.0;
  for (int t = 0; t < pairs; ++t) {
    for (double& v : x) v = rng.uniform();
    for (double& v : y) v = rng.uniform();
    sm.forward(x, ax);
    sm.back(y, aty);
    double lhs = 0.0, rhs = 0.0, nax = 0.0, ny = 0.0;
    for (std::size_t k = 0; k < ax.size(); ++k) {
      lhs += ax[k] * y[k];
      nax += ax[k] * ax[k];
      ny += y[k] * y[k];
    }
    for (std::size_t k = 0; k < x.size(); ++k) rhs += x[k] * aty[k];
    worst = std::max(worst, std::fabs(lhs - rhs) / (std::sqrt(nax) * std::sqrt(ny)));
  }
  return worst;
}

}  // namespace ssrecon
