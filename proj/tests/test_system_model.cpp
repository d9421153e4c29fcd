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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "ssrecon/errors.hpp"
#include "ssrecon/system_model.hpp"
#include "support/dense_oracle.hpp"
#include "support/gradcheck.hpp"

using namespace ssrecon;
using ssrecon::testing::dense_system_matrix;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (double& x : v) x = nd(gen);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

double worst_adjoint_error(const Geometry& g, int pairs, std::uint64_t seed) {
  const SystemMatrix sm(g);
  std::mt19937_64 gen(seed);
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const auto x = random_vector(g.pixels(), gen);
    const auto y = random_vector(g.bins(), gen);
    std::vector<double> ax(g.bins()), aty(g.pixels());
    sm.forward(x, ax);
    sm.back(y, aty);
    worst = std::max(worst, std::fabs(dot(ax, y) - dot(x, aty)) / (norm(ax) * norm(y)));
  }
  return worst;
}

}  // namespace

TEST_CASE("geometry validation") {
  CHECK_NOTHROW(Geometry{}.validate());
  CHECK_THROWS_AS((Geometry{0, 4, 4}.validate()), GeometryError);
  CHECK_THROWS_AS((Geometry{4, 0, 4}.validate()), GeometryError);
  CHECK_THROWS_AS((Geometry{4, 4, 0}.validate()), GeometryError);
  CHECK(Geometry{}.n == 96);
  CHECK(Geometry{8, 8, 4}.angle(2) == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("view 0 equals column sums when r = n") {
  const Geometry g{6, 6, 3};
  const SystemMatrix sm(g);
  std::mt19937_64 gen(1);
  Image2D x(6);
  x.data = random_vector(36, gen);
  const Sinogram2D q = sm.forward_project(x);
  for (std::size_t j = 0; j < 6; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < 6; ++i) col += x.at(i, j);
    CHECK(q.at(0, j) == doctest::Approx(col).epsilon(1e-14));
  }
}

TEST_CASE("single pixel at two orthogonal views") {
  const SystemMatrix sm(Geometry{4, 4, 2});
  Image2D x(4);
  x.at(2, 1) = 1.0;
  const Sinogram2D q = sm.forward_project(x);
  for (std::size_t b = 0; b < 4; ++b) {
    CHECK(q.at(0, b) == (b == 1 ? 1.0 : 0.0));
    CHECK(q.at(1, b) == (b == 2 ? 1.0 : 0.0));
  }
}

TEST_CASE("sparse matrix equals the dense brute-force construction") {
  for (const Geometry g : {Geometry{8, 8, 8}, Geometry{7, 9, 5}, Geometry{10, 6, 4}}) {
    const SystemMatrix sm(g);
    const auto dense = dense_system_matrix(g.n, g.r, g.v);
    std::size_t nnz = 0;
    for (std::size_t b = 0; b < g.bins(); ++b) {
      std::vector<double> row(g.pixels(), 0.0);
      for (auto p : sm.row(b)) row[p] = 1.0;
      for (std::size_t p = 0; p < g.pixels(); ++p) CHECK(row[p] == dense.at(b, p));
    }
    for (std::size_t p = 0; p < g.pixels(); ++p)
      for (std::size_t a = 0; a < g.v; ++a) {
        const auto b = sm.bin_of(p, a);
        for (std::size_t k = 0; k < g.r; ++k) {
          const double hit = dense.at(a * g.r + k, p);
          nnz += hit != 0.0;
          CHECK(hit == (b == static_cast<std::int32_t>(k) ? 1.0 : 0.0));
        }
      }
    CHECK(sm.nonzeros() == nnz);
  }
}

TEST_CASE("projections match the dense oracle to the last bit") {
  const Geometry g = Geometry::square(8);
  const SystemMatrix sm(g);
  const auto dense = dense_system_matrix(8, 8, 8);
  std::mt19937_64 gen(2);
  for (int k = 0; k < 10; ++k) {
    Image2D x(8);
    x.data = random_vector(64, gen);
    apply_fov_mask(g, x);
    CHECK(sm.forward_project(x).data == dense.apply(x.data));
    Sinogram2D y(8, 8);
    y.data = random_vector(64, gen);
    CHECK(sm.back_project(y).data == dense.apply_transpose(y.data));
  }
}

TEST_CASE("zero in, zero out") {
  const SystemMatrix sm(Geometry::square(8));
  CHECK(sm.forward_project(Image2D(8)).sum() == 0.0);
  CHECK(sm.back_project(Sinogram2D(8, 8)).sum() == 0.0);
}

TEST_CASE("uniform FOV image: every view carries all in-FOV pixels") {
  const Geometry g{16, 16, 12};
  const SystemMatrix sm(g);
  const Image2D& mask = sm.fov_mask();
  const double inside = mask.sum();
  CHECK(inside > 0.0);
  const Sinogram2D q = sm.forward_project(mask);
  for (std::size_t a = 0; a < g.v; ++a) {
    double s = 0.0;
    for (std::size_t b = 0; b < g.r; ++b) s += q.at(a, b);
    CHECK(s == inside);
  }
}

TEST_CASE("sensitivity image") {
  const Geometry g = Geometry::square(8);
  const SystemMatrix sm(g);
  const Image2D& sens = sm.sensitivity_image();
  const auto dense = dense_system_matrix(8, 8, 8);
  CHECK(sens.data == dense.apply_transpose(std::vector<double>(64, 1.0)));
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      if (g.in_fov(i, j)) CHECK(sens.at(i, j) == 8.0);
      CHECK(sens.at(i, j) <= 8.0);
    }
  CHECK(sens.at(0, 0) < 8.0);
  CHECK(sm.back_project(Sinogram2D(8, 8, 1.0)).data == sens.data);

  const SystemMatrix big(Geometry{});
  CHECK(big.sensitivity_image().at(48, 48) == 96.0);
}

TEST_CASE("bpf sensitivity") {
  const SystemMatrix sm(Geometry::square(8));
  const auto dense = dense_system_matrix(8, 8, 8);
  const Image2D& s = sm.bpf_sensitivity();
  CHECK(s.data == dense.apply_transpose(dense.apply(std::vector<double>(64, 1.0))));
  for (double v : s.data) CHECK(v >= 0.0);
  // Centre versus an in-FOV edge pixel, both from the oracle.
  const auto ref = dense.apply_transpose(dense.apply(std::vector<double>(64, 1.0)));
  CHECK(ref[3 * 8 + 3] > ref[3 * 8 + 0]);
  CHECK(s.at(3, 3) > s.at(3, 0));
}

TEST_CASE("adjoint identity") {
  CHECK(worst_adjoint_error(Geometry::square(8), 20, 3) < 1e-12);
  CHECK(worst_adjoint_error(Geometry{12, 17, 7}, 20, 4) < 1e-12);
  CHECK(worst_adjoint_error(Geometry::square(32), 20, 5) < 1e-12);
}

TEST_CASE("nonnegativity preservation") {
  const SystemMatrix sm(Geometry::square(12));
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Image2D x(12);
  for (double& v : x.data) v = ud(gen);
  for (double v : sm.forward_project(x).data) CHECK(v >= 0.0);
  Sinogram2D y(12, 12);
  for (double& v : y.data) v = ud(gen);
  for (double v : sm.back_project(y).data) CHECK(v >= 0.0);
}

TEST_CASE("shape mismatches are rejected") {
  const SystemMatrix sm(Geometry::square(8));
  CHECK_THROWS_AS(sm.forward_project(Image2D(7)), GeometryError);
  CHECK_THROWS_AS(sm.back_project(Sinogram2D(8, 9)), GeometryError);
  CHECK_THROWS_AS(sm.back_project(Sinogram2D(9, 8)), GeometryError);
  std::vector<double> img(64), sino(63);
  CHECK_THROWS_AS(sm.forward(img, sino), std::invalid_argument);
  Tape tape;
  CHECK_THROWS_AS(forward_project(sm, tape.constant(Tensor(Shape{1, 8, 7}))), GeometryError);
  CHECK_THROWS_AS(back_project(sm, tape.constant(Tensor(Shape{1, 8, 8, 1}))), GeometryError);
}

TEST_CASE("differentiable projections have each other as adjoints") {
  const Geometry g = Geometry::square(8);
  const SystemMatrix sm(g);
  std::mt19937_64 gen(7);
  ParamStore store;
  store.add("x", Tensor(Shape{1, 8, 8}, random_vector(64, gen)));
  store.add("y", Tensor(Shape{1, 8, 8}, random_vector(64, gen)));
  const Tensor wx(Shape{1, 8, 8}, random_vector(64, gen)), wy(Shape{1, 8, 8}, random_vector(64, gen));
  auto build = [&](Tape& tape, ParamStore& s) {
    Var a = sum(mul(forward_project(sm, tape.parameter(s, 0)), tape.constant(wy)));
    Var b = sum(mul(back_project(sm, tape.parameter(s, 1)), tape.constant(wx)));
    return add(a, b);
  };
  // The loss is linear, so a wide step removes truncation error and keeps
  // cancellation small.
  const auto res = ssrecon::testing::gradient_check(store, build, 1e-2);
  INFO(res.worst);
  CHECK(res.max_rel_error < 1e-8);

  // The gradients are Aᵀw and Aw exactly.
  Tape tape;
  tape.backward(build(tape, store), store);
  const auto dense = dense_system_matrix(8, 8, 8);
  CHECK(store.at(0).grad.data == dense.apply_transpose(wy.data));
  CHECK(store.at(1).grad.data == dense.apply(wx.data));
}

TEST_CASE("coordinate-list export") {
  const SystemMatrix sm(Geometry{4, 4, 2});
  const auto path = std::filesystem::temp_directory_path() / "ssrecon_test_coo.txt";
  sm.export_coo(path);
  std::ifstream in(path);
  std::size_t lines = 0, view, bin, row, col;
  bool found = false;
  while (in >> view >> bin >> row >> col) {
    ++lines;
    CHECK(sm.bin_of(row * 4 + col, view) == static_cast<std::int32_t>(bin));
    found |= view == 1 && bin == 2 && row == 2 && col == 1;
  }
  CHECK(lines == sm.nonzeros());
  CHECK(found);
  std::filesystem::remove(path);
}

TEST_CASE("library adjoint check agrees with the independent one") {
  const SystemMatrix sm(Geometry::square(16));
  const double e = adjoint_error(sm, 20, 9);
  CHECK(e < 1e-12);
  CHECK(adjoint_error(sm, 20, 9) == e);
  CHECK_THROWS_AS(adjoint_error(sm, 0, 9), std::invalid_argument);
}
