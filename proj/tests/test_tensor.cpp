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
#include <random>

#include "ssrecon/errors.hpp"
#include "ssrecon/params.hpp"
#include "ssrecon/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace ssrecon;
using ssrecon::testing::gradient_check;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.data) v = dist(gen);
  return t;
}

// Direct nested-loop cross-correlation with zero padding.
Tensor naive_conv(const Tensor& in, const Tensor& w, const Tensor& b) {
  const std::size_t ci = in.dim(0), h = in.dim(1), wd = in.dim(2), co = w.dim(0), k = w.dim(2);
  const long pad = static_cast<long>(k / 2);
  Tensor out(Shape{co, h, wd});
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < wd; ++x) {
        double acc = b[o];
        for (std::size_t c = 0; c < ci; ++c)
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long iy = static_cast<long>(y + ky) - pad, ix = static_cast<long>(x + kx) - pad;
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
              acc += w[((o * ci + c) * k + ky) * k + kx] * in[(c * h + iy) * wd + ix];
            }
        out[(o * h + y) * wd + x] = acc;
      }
  return out;
}

// Terms r ⊙ op(inputs) with a fixed random weighting r, so every output
// element contributes a distinct amount.
ssrecon::testing::TermsBuilder weighted_sum(std::function<Var(std::vector<Var>&)> op, std::uint64_t seed) {
  return [op, seed](Tape& tape, ParamStore& store) {
    std::vector<Var> in;
    for (std::size_t i = 0; i < store.size(); ++i) in.push_back(tape.parameter(store, i));
    Var y = op(in);
    std::mt19937_64 gen(seed);
    Var r = tape.constant(random_tensor(y.shape(), gen));
    return mul(y, r);
  };
}

}  // namespace

TEST_CASE("conv2d: centre tap of a 9x9 kernel on a single pixel") {
  Tape tape;
  Tensor w(Shape{1, 1, 9, 9});
  w[4 * 9 + 4] = 1.5;
  Var out = conv2d(tape.constant(Tensor(Shape{1, 1, 1}, {2.0})), tape.constant(w),
                   tape.constant(Tensor(Shape{1}, {0.25})));
  CHECK(out.shape() == Shape{1, 1, 1});
  CHECK(out.value()[0] == doctest::Approx(1.5 * 2.0 + 0.25));
}

TEST_CASE("conv2d: zero input gives the bias everywhere") {
  std::mt19937_64 gen(1);
  Tape tape;
  Var out = conv2d(tape.constant(Tensor(Shape{2, 5, 6})), tape.constant(random_tensor({3, 2, 9, 9}, gen)),
                   tape.constant(Tensor(Shape{3}, {0.5, -1.0, 2.0})));
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.value()[i] == (i < 30 ? 0.5 : i < 60 ? -1.0 : 2.0));
}

TEST_CASE("conv2d: matches a direct nested-loop convolution") {
  std::mt19937_64 gen(2);
  for (std::size_t k : {1u, 3u, 9u}) {
    Tensor in = random_tensor({3, 7, 11}, gen), w = random_tensor({4, 3, k, k}, gen), b = random_tensor({4}, gen);
    Tape tape;
    Var out = conv2d(tape.constant(in), tape.constant(w), tape.constant(b));
    const Tensor ref = naive_conv(in, w, b);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(out.value()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d: shape errors") {
  Tape tape;
  Var in = tape.constant(Tensor(Shape{2, 4, 4}));
  CHECK_THROWS_AS(conv2d(in, tape.constant(Tensor(Shape{1, 3, 3, 3})), tape.constant(Tensor(Shape{1}))),
                  GeometryError);
  CHECK_THROWS_AS(conv2d(in, tape.constant(Tensor(Shape{1, 2, 4, 4})), tape.constant(Tensor(Shape{1}))),
                  GeometryError);
  CHECK_THROWS_AS(conv2d(in, tape.constant(Tensor(Shape{1, 2, 3, 3})), tape.constant(Tensor(Shape{2}))),
                  GeometryError);
}

TEST_CASE("conv2d: weight gradient of sum(output) matches finite differences") {
  std::mt19937_64 gen(3);
  ParamStore store;
  store.add("w", random_tensor({3, 2, 9, 9}, gen));
  const Tensor input = random_tensor({2, 8, 8}, gen);
  auto build = [&](Tape& tape, ParamStore& s) {
    Var w = tape.parameter(s, 0);
    return sum(conv2d(tape.constant(input), w, tape.constant(Tensor(Shape{3}))));
  };
  const auto res = gradient_check(store, build);
  INFO("worst " << res.worst);
  CHECK(res.max_rel_error < 1e-5);
  CHECK(res.checked == 3 * 2 * 81);
}

TEST_CASE("conv2d: big spatial extent is processed in column blocks") {
  // 64 channels × 81 taps × 4096 positions exceeds one im2col block.
  std::mt19937_64 gen(4);
  Tensor in = random_tensor({64, 64, 64}, gen), w = random_tensor({1, 64, 9, 9}, gen), b(Shape{1});
  Tape tape;
  Var out = conv2d(tape.constant(in), tape.constant(w), tape.constant(b));
  const Tensor ref = naive_conv(in, w, b);
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::fabs(out.value()[i] - ref[i]));
  CHECK(worst < 1e-10);
}

TEST_CASE("prelu") {
  Tape tape;
  ParamStore store;
  store.add("slope", Tensor(Shape{1}, {0.25}));
  Var slope = tape.parameter(store, 0);
  Var x = tape.constant(Tensor(Shape{1, 2}, {-2.0, 3.0}));
  Var y = prelu(x, slope);
  CHECK(y.value()[0] == -0.5);
  CHECK(y.value()[1] == 3.0);
  tape.backward(sum(y), store);
  CHECK(store.at(0).grad[0] == -2.0);

  Tape t2;
  Var id = prelu(t2.constant(Tensor(Shape{3}, {-1.0, 0.0, 4.0})), t2.constant(Tensor(Shape{1}, {1.0})));
  CHECK(id.value().data == std::vector<double>{-1.0, 0.0, 4.0});

  CHECK_THROWS_AS(prelu(t2.constant(Tensor(Shape{3, 2})), t2.constant(Tensor(Shape{2}))), GeometryError);
}

TEST_CASE("elementwise conventions") {
  ParamStore store;
  store.add("a", Tensor(Shape{3}, {-3.0, 0.0, 2.0}));
  Tape tape;
  Var a = tape.parameter(store, 0);
  Var y = abs(a);
  CHECK(y.value().data == std::vector<double>{3.0, 0.0, 2.0});
  tape.backward(sum(y), store);
  CHECK(store.at(0).grad.data == std::vector<double>{-1.0, 0.0, 1.0});

  Tape t2;
  CHECK(ln(t2.constant(Tensor::scalar(0.0))).item() == std::log(1e-12));
  CHECK(ln(t2.constant(Tensor::scalar(-5.0))).item() == std::log(1e-12));
  CHECK(div(t2.constant(Tensor::scalar(1.0)), t2.constant(Tensor::scalar(0.0))).item() == 1e12);

  ParamStore ones;
  ones.add("x", Tensor(Shape{2, 2}, 1.0));
  Tape t3;
  Var s = sum(t3.parameter(ones, 0));
  CHECK(s.item() == 4.0);
  t3.backward(s, ones);
  CHECK(ones.at(0).grad.data == std::vector<double>(4, 1.0));

  Tape t4;
  CHECK(mean(t4.constant(Tensor(Shape{4}, {1.0, 2.0, 3.0, 6.0}))).item() == 3.0);
  CHECK(scale(t4.constant(Tensor::scalar(2.0)), -1.5).item() == -3.0);
  CHECK_THROWS_AS(add(t4.constant(Tensor(Shape{2})), t4.constant(Tensor(Shape{3}))), GeometryError);
}

TEST_CASE("every primitive's gradient matches finite differences on random shapes") {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::size_t> extent(1, 16), chans(1, 4);
  for (int trial = 0; trial < 4; ++trial) {
    const Shape shape{chans(gen), extent(gen), extent(gen)};
    CAPTURE(shape_string(shape));
    auto check = [&](const char* name, std::vector<Tensor> inputs, std::function<Var(std::vector<Var>&)> op) {
      ParamStore store;
      for (std::size_t i = 0; i < inputs.size(); ++i) store.add("in" + std::to_string(i), inputs[i]);
      const auto res = gradient_check(store, weighted_sum(op, 99 + trial));
      INFO(name << " worst " << res.worst);
      CHECK(res.max_rel_error < 1e-5);
    };
    // Keep operands away from kinks and clamps by more than h.
    auto away_from_zero = [&](Shape s) {
      Tensor t = random_tensor(std::move(s), gen, 0.1, 2.0);
      std::bernoulli_distribution flip(0.5);
      for (double& v : t.data) v = flip(gen) ? -v : v;
      return t;
    };
    const Tensor a = away_from_zero(shape), b = away_from_zero(shape);
    const Tensor pos = random_tensor(shape, gen, 0.5, 3.0);
    check("add", {a, b}, [](auto& v) { return add(v[0], v[1]); });
    check("sub", {a, b}, [](auto& v) { return sub(v[0], v[1]); });
    check("mul", {a, b}, [](auto& v) { return mul(v[0], v[1]); });
    check("div", {a, pos}, [](auto& v) { return div(v[0], v[1]); });
    check("ln", {pos}, [](auto& v) { return ln(v[0]); });
    check("abs", {a}, [](auto& v) { return abs(v[0]); });
    check("relu", {a}, [](auto& v) { return relu(v[0]); });
    check("scale", {a}, [](auto& v) { return scale(v[0], -0.7); });
    check("mean", {a}, [](auto& v) { return mean(v[0]); });
    check("prelu", {a, random_tensor({shape[0]}, gen, 0.1, 0.9)}, [](auto& v) { return prelu(v[0], v[1]); });
    check("prelu_scalar", {a, Tensor(Shape{1}, {0.3})}, [](auto& v) { return prelu(v[0], v[1]); });
    check("conv2d", {a, random_tensor({2, shape[0], 3, 3}, gen), random_tensor({2}, gen)},
          [](auto& v) { return conv2d(v[0], v[1], v[2]); });
  }
}

TEST_CASE("backward") {
  ParamStore store;
  store.add("w", Tensor(Shape{3}, {1.0, -2.0, 0.5}));
  const Tensor x(Shape{3}, {4.0, 5.0, 6.0});

  Tape tape;
  Var w = tape.parameter(store, 0);
  tape.backward(sum(mul(w, tape.constant(x))), store);
  CHECK(store.at(0).grad.data == x.data);

  SUBCASE("two uses of the same parameter add up") {
    Tape t;
    Var w1 = t.parameter(store, 0);
    Var y = add(mul(w1, t.constant(x)), scale(w1, 2.0));
    t.backward(sum(y), store);
    CHECK(store.at(0).grad.data == std::vector<double>{6.0, 7.0, 8.0});
  }
  SUBCASE("gradients are zeroed before each pass") {
    Tape t;
    Var w1 = t.parameter(store, 0);
    t.backward(sum(w1), store);
    CHECK(store.at(0).grad.data == std::vector<double>{1.0, 1.0, 1.0});
  }
  SUBCASE("non-scalar root is rejected") {
    Tape t;
    Var w1 = t.parameter(store, 0);
    CHECK_THROWS_AS(t.backward(w1, store), std::invalid_argument);
  }
  SUBCASE("constants receive no gradient and record no adjoint") {
    Tape t;
    Var c = t.constant(x);
    Var y = sum(mul(c, c));
    CHECK_FALSE(y.requires_grad());
  }
}

TEST_CASE("tape replay is bit-identical") {
  std::mt19937_64 gen(6);
  ParamStore store;
  store.add("w", random_tensor({4, 2, 9, 9}, gen));
  store.add("b", random_tensor({4}, gen));
  const Tensor in = random_tensor({2, 12, 12}, gen);
  auto run = [&] {
    Tape t;
    Var y = sum(abs(conv2d(t.constant(in), t.parameter(store, 0), t.parameter(store, 1))));
    t.backward(y, store);
    return std::make_pair(y.item(), store.at(0).grad.data);
  };
  const auto first = run();
  const auto second = run();
  CHECK(first.first == second.first);
  CHECK(first.second == second.second);
}
