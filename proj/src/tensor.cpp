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

#include "ssrecon/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ssrecon/errors.hpp"
#include "ssrecon/params.hpp"

namespace ssrecon {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Upper bound on the im2col scratch buffer, in doubles (64 MiB).
constexpr std::size_t kIm2colBudget = std::size_t{1} << 23;

Tape& same_tape(const Var& a, const Var& b) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw std::invalid_argument("operands are not recorded on the same tape");
  }
  return *a.tape();
}

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw std::invalid_argument("operand is not recorded on a tape");
  return *a.tape();
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw GeometryError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                        " vs " + shape_string(b.shape()));
  }
}

struct ConvDims {
  std::size_t c_in, c_out, h, w, k, pad;
  std::size_t hw() const { return h * w; }
  std::size_t col_rows() const { return c_in * k * k; }
};

using ColMat = Eigen::MatrixXd;

// Horizontal receptive fields of padded rows y0-pad .. y0+rows+pad-1: column
// (r, x) holds in[c][y0-pad+r][x+kx-pad] for all (c, kx), zero outside the
// image. Column-major (C_in·K) × ((rows+2·pad)·W). A convolution is then a sum
// over ky of GEMMs on column windows shifted by ky·W.
void row_patches(const ConvDims& d, const double* in, std::size_t y0, std::size_t rows, ColMat& out) {
  const auto h = static_cast<std::ptrdiff_t>(d.h);
  const auto w = static_cast<std::ptrdiff_t>(d.w);
  const auto k = static_cast<std::ptrdiff_t>(d.k);
  const auto pad = static_cast<std::ptrdiff_t>(d.pad);
  const std::size_t prow = rows + 2 * d.pad;
  out.resize(static_cast<Eigen::Index>(d.c_in * d.k), static_cast<Eigen::Index>(prow * d.w));
  double* dst = out.data();
  for (std::size_t r = 0; r < prow; ++r) {
    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y0 + r) - pad;
    const bool inside = iy >= 0 && iy < h;
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const std::ptrdiff_t kx0 = std::max<std::ptrdiff_t>(0, pad - x);
      const std::ptrdiff_t kx1 = std::min<std::ptrdiff_t>(k, w + pad - x);
      for (std::size_t c = 0; c < d.c_in; ++c, dst += k) {
        if (!inside) {
          std::fill(dst, dst + k, 0.0);
          continue;
        }
        const double* src = in + c * d.hw() + iy * w + x - pad;
        std::fill(dst, dst + kx0, 0.0);
        std::copy(src + kx0, src + kx1, dst + kx0);
        std::fill(dst + kx1, dst + k, 0.0);
      }
    }
  }
}

// Output rows per block so that the row patches stay within the budget.
std::size_t row_block(const ConvDims& d) {
  const std::size_t per_row = d.c_in * d.k * d.w;
  const std::size_t fit = kIm2colBudget / per_row;
  return std::clamp<std::size_t>(fit > 2 * d.pad ? fit - 2 * d.pad : 1, 1, d.h);
}

// Weights split by kernel row: taps[ky] is the column-major
// C_out × (C_in·K) matrix with entry (o, c·K + kx) = w[o][c][ky][kx].
std::vector<ColMat> weight_taps(const ConvDims& d, const double* w) {
  std::vector<ColMat> taps(d.k, ColMat(static_cast<Eigen::Index>(d.c_out), static_cast<Eigen::Index>(d.c_in * d.k)));
  for (std::size_t o = 0; o < d.c_out; ++o)
    for (std::size_t c = 0; c < d.c_in; ++c)
      for (std::size_t ky = 0; ky < d.k; ++ky)
        for (std::size_t kx = 0; kx < d.k; ++kx)
          taps[ky](static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(c * d.k + kx)) =
              w[((o * d.c_in + c) * d.k + ky) * d.k + kx];
  return taps;
}

// The input adjoint is a convolution of the output gradient with the kernels
// flipped in space and C_in, C_out exchanged; these are its taps.
std::vector<ColMat> flipped_weight_taps(const ConvDims& d, const double* w) {
  std::vector<ColMat> taps(d.k, ColMat(static_cast<Eigen::Index>(d.c_in), static_cast<Eigen::Index>(d.c_out * d.k)));
  for (std::size_t o = 0; o < d.c_out; ++o)
    for (std::size_t c = 0; c < d.c_in; ++c)
      for (std::size_t ky = 0; ky < d.k; ++ky)
        for (std::size_t kx = 0; kx < d.k; ++kx)
          taps[d.k - 1 - ky](static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(o * d.k + (d.k - 1 - kx))) =
              w[((o * d.c_in + c) * d.k + ky) * d.k + kx];
  return taps;
}

// out (C_out×H×W) = conv(in, taps); `add` accumulates instead of overwriting.
void conv_forward(const ConvDims& d, const double* in, const std::vector<ColMat>& taps, double* out, bool add) {
  const std::size_t rb = row_block(d);
  ColMat patches, res;
  Eigen::Map<RowMat> omat(out, static_cast<Eigen::Index>(d.c_out), static_cast<Eigen::Index>(d.hw()));
  for (std::size_t y0 = 0; y0 < d.h; y0 += rb) {
    const std::size_t rows = std::min(rb, d.h - y0);
    const auto nb = static_cast<Eigen::Index>(rows * d.w);
    row_patches(d, in, y0, rows, patches);
    res.noalias() = taps[0] * patches.leftCols(nb);
    for (std::size_t ky = 1; ky < d.k; ++ky) {
      res.noalias() += taps[ky] * patches.middleCols(static_cast<Eigen::Index>(ky * d.w), nb);
    }
    const auto j0 = static_cast<Eigen::Index>(y0 * d.w);
    if (add) omat.middleCols(j0, nb) += res;
    else omat.middleCols(j0, nb) = res;
  }
}

template <typename Fn>
Var unary(Var x, Fn&& f, Tape::Adjoint adjoint) {
  Tape& tape = tape_of(x);
  Tensor out(x.shape());
  const auto& in = x.value().data;
  for (std::size_t i = 0; i < in.size(); ++i) out.data[i] = f(in[i]);
  return tape.record(std::move(out), {x.id()}, std::move(adjoint));
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(shape_numel(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != shape_numel(shape)) {
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_string(shape));
  }
}

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("empty Var");
  return tape_->value(id_);
}

double Var::item() const {
  const Tensor& t = value();
  if (t.size() != 1) throw std::invalid_argument("item() on non-scalar " + shape_string(t.shape));
  return t.data[0];
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, std::nullopt, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(ParamStore& store, std::size_t index) {
  if (bound_store_ && bound_store_ != &store) {
    throw std::invalid_argument("tape already holds parameters of another store");
  }
  bound_store_ = &store;
  nodes_.push_back(Node{store.at(index).value, {}, {}, true, index, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> operands, Adjoint adjoint) {
  bool needs = false;
  for (std::size_t op : operands) {
    if (op >= nodes_.size()) throw std::logic_error("operand recorded after its consumer");
    needs = needs || nodes_[op].requires_grad;
  }
  if (!needs) adjoint = nullptr;
  nodes_.push_back(Node{std::move(value), std::move(operands), std::move(adjoint), needs,
                        std::nullopt, {}});
  return Var(this, nodes_.size() - 1);
}

std::span<double> Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_.at(id);
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

void Tape::backward(Var root, ParamStore& store) {
  if (root.tape() != this) throw std::invalid_argument("root is not recorded on this tape");
  if (root.size() != 1) {
    throw std::invalid_argument("backward() needs a scalar root, got " +
                                shape_string(root.shape()));
  }
  if (bound_store_ && bound_store_ != &store) {
    throw std::invalid_argument("backward() called with a different parameter store");
  }
  store.zero_grads();
  for (Node& node : nodes_) node.grad.clear();
  grad_buffer(root.id())[0] = 1.0;

  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.param_index) {
      auto& g = store.at(*node.param_index).grad.data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i];
    } else if (node.adjoint) {
      node.adjoint(*this, id);
      if (id != root.id()) std::vector<double>().swap(nodes_[id].grad);
    }
  }
}

// ---------------------------------------------------------------------------

Var conv2d(Var input, Var weight, Var bias) {
  Tape& tape = same_tape(input, weight);
  same_tape(input, bias);
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  if (is.size() != 3 || ws.size() != 4 || bias.shape().size() != 1) {
    throw GeometryError("conv2d expects input C×H×W, weight O×C×K×K, bias O; got " +
                        shape_string(is) + ", " + shape_string(ws) + ", " +
                        shape_string(bias.shape()));
  }
  if (ws[1] != is[0]) {
    throw GeometryError("conv2d: input has " + std::to_string(is[0]) +
                        " channels but weight expects " + std::to_string(ws[1]));
  }
  if (ws[2] != ws[3] || ws[2] % 2 == 0) {
    throw GeometryError("conv2d: kernel must be square with odd extent, got " + shape_string(ws));
  }
  if (bias.shape()[0] != ws[0]) throw GeometryError("conv2d: bias length does not match C_out");

  const ConvDims d{is[0], ws[0], is[1], is[2], ws[2], (ws[2] - 1) / 2};
  Tensor out(Shape{d.c_out, d.h, d.w});
  conv_forward(d, input.value().data.data(), weight_taps(d, weight.value().data.data()), out.data.data(), false);
  const auto& b = bias.value().data;
  for (std::size_t c = 0; c < d.c_out; ++c) {
    double* plane = out.data.data() + c * d.hw();
    for (std::size_t j = 0; j < d.hw(); ++j) plane[j] += b[c];
  }

  const std::size_t in_id = input.id(), w_id = weight.id(), b_id = bias.id();
  return tape.record(std::move(out), {in_id, w_id, b_id}, [d, in_id, w_id, b_id](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    if (t.requires_grad(b_id)) {
      auto gb = t.grad_buffer(b_id);
      for (std::size_t c = 0; c < d.c_out; ++c) {
        const double* plane = g + c * d.hw();
        double acc = 0.0;
        for (std::size_t j = 0; j < d.hw(); ++j) acc += plane[j];
        gb[c] += acc;
      }
    }
    if (t.requires_grad(w_id)) {
      // dW[ky] = G · (row patches shifted by ky)ᵀ, accumulated over row blocks.
      const std::size_t rb = row_block(d);
      const auto cols = static_cast<Eigen::Index>(d.c_in * d.k);
      std::vector<ColMat> dw(d.k, ColMat::Zero(static_cast<Eigen::Index>(d.c_out), cols));
      Eigen::Map<const RowMat> gmat(g, static_cast<Eigen::Index>(d.c_out), static_cast<Eigen::Index>(d.hw()));
      ColMat patches, gblk;
      for (std::size_t y0 = 0; y0 < d.h; y0 += rb) {
        const std::size_t rows = std::min(rb, d.h - y0);
        const auto nb = static_cast<Eigen::Index>(rows * d.w);
        row_patches(d, t.value(in_id).data.data(), y0, rows, patches);
        gblk = gmat.middleCols(static_cast<Eigen::Index>(y0 * d.w), nb);
        for (std::size_t ky = 0; ky < d.k; ++ky) {
          dw[ky].noalias() += gblk * patches.middleCols(static_cast<Eigen::Index>(ky * d.w), nb).transpose();
        }
      }
      auto gw = t.grad_buffer(w_id);
      for (std::size_t o = 0; o < d.c_out; ++o)
        for (std::size_t c = 0; c < d.c_in; ++c)
          for (std::size_t ky = 0; ky < d.k; ++ky)
            for (std::size_t kx = 0; kx < d.k; ++kx)
              gw[((o * d.c_in + c) * d.k + ky) * d.k + kx] +=
                  dw[ky](static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(c * d.k + kx));
    }
    if (t.requires_grad(in_id)) {
      const ConvDims adj{d.c_out, d.c_in, d.h, d.w, d.k, d.pad};
      conv_forward(adj, g, flipped_weight_taps(d, t.value(w_id).data.data()), t.grad_buffer(in_id).data(), true);
    }
  });
}

Var prelu(Var input, Var slope) {
  Tape& tape = same_tape(input, slope);
  const Shape& s = input.shape();
  if (s.empty()) throw GeometryError("prelu: input has rank 0");
  const std::size_t channels = slope.size();
  if (channels != 1 && channels != s[0]) {
    throw GeometryError("prelu: slope has " + std::to_string(channels) + " entries for " +
                        std::to_string(s[0]) + " channels");
  }
  const std::size_t per = input.size() / s[0];
  const std::size_t plane = channels == 1 ? input.size() : per;
  const auto& in = input.value().data;
  const auto& a = slope.value().data;
  Tensor out(s);
  for (std::size_t i = 0; i < in.size(); ++i) {
    out.data[i] = in[i] >= 0.0 ? in[i] : a[i / plane] * in[i];
  }
  const std::size_t x_id = input.id(), a_id = slope.id();
  return tape.record(std::move(out), {x_id, a_id}, [x_id, a_id, plane](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    const auto& x = t.value(x_id).data;
    const auto& slopes = t.value(a_id).data;
    if (t.requires_grad(x_id)) {
      auto gx = t.grad_buffer(x_id);
      for (std::size_t i = 0; i < x.size(); ++i) gx[i] += x[i] >= 0.0 ? g[i] : slopes[i / plane] * g[i];
    }
    if (t.requires_grad(a_id)) {
      auto ga = t.grad_buffer(a_id);
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0) ga[i / plane] += x[i] * g[i];
      }
    }
  });
}

Var relu(Var x) {
  const std::size_t x_id = x.id();
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [x_id](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    const auto& v = t.value(x_id).data;
    auto gx = t.grad_buffer(x_id);
    for (std::size_t i = 0; i < v.size(); ++i) gx[i] += v[i] > 0.0 ? g[i] : 0.0;
  });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  const auto& x = a.value().data;
  const auto& y = b.value().data;
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = x[i] + y[i];
  const std::size_t a_id = a.id(), b_id = b.id();
  return tape.record(std::move(out), {a_id, b_id}, [a_id, b_id](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    for (std::size_t op : {a_id, b_id}) {
      if (!t.requires_grad(op)) continue;
      auto go = t.grad_buffer(op);
      for (std::size_t i = 0; i < g.size(); ++i) go[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  const auto& x = a.value().data;
  const auto& y = b.value().data;
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = x[i] - y[i];
  const std::size_t a_id = a.id(), b_id = b.id();
  return tape.record(std::move(out), {a_id, b_id}, [a_id, b_id](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    if (t.requires_grad(a_id)) {
      auto ga = t.grad_buffer(a_id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b_id)) {
      auto gb = t.grad_buffer(b_id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  const auto& x = a.value().data;
  const auto& y = b.value().data;
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = x[i] * y[i];
  const std::size_t a_id = a.id(), b_id = b.id();
  return tape.record(std::move(out), {a_id, b_id}, [a_id, b_id](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    const auto& x = t.value(a_id).data;
    const auto& y = t.value(b_id).data;
    if (t.requires_grad(a_id)) {
      auto ga = t.grad_buffer(a_id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    }
    if (t.requires_grad(b_id)) {
      auto gb = t.grad_buffer(b_id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
    }
  });
}

Var div(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a, b, "div");
  Tensor out(a.shape());
  const auto& x = a.value().data;
  const auto& y = b.value().data;
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = x[i] / std::max(y[i], kClampFloor);
  const std::size_t a_id = a.id(), b_id = b.id();
  return tape.record(std::move(out), {a_id, b_id}, [a_id, b_id](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    const auto& x = t.value(a_id).data;
    const auto& y = t.value(b_id).data;
    if (t.requires_grad(a_id)) {
      auto ga = t.grad_buffer(a_id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / std::max(y[i], kClampFloor);
    }
    if (t.requires_grad(b_id)) {
      auto gb = t.grad_buffer(b_id);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (y[i] > kClampFloor) gb[i] -= g[i] * x[i] / (y[i] * y[i]);
      }
    }
  });
}

Var ln(Var x) {
  const std::size_t x_id = x.id();
  return unary(x, [](double v) { return std::log(std::max(v, kClampFloor)); },
               [x_id](Tape& t, std::size_t self) {
                 const auto g = t.grad(self);
                 const auto& v = t.value(x_id).data;
                 auto gx = t.grad_buffer(x_id);
                 for (std::size_t i = 0; i < v.size(); ++i) {
                   if (v[i] > kClampFloor) gx[i] += g[i] / v[i];
                 }
               });
}

Var abs(Var x) {
  const std::size_t x_id = x.id();
  return unary(x, [](double v) { return std::fabs(v); }, [x_id](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    const auto& v = t.value(x_id).data;
    auto gx = t.grad_buffer(x_id);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] > 0.0) {
        gx[i] += g[i];
      } else if (v[i] < 0.0) {
        gx[i] -= g[i];
      }
    }
  });
}

Var scale(Var x, double factor) {
  const std::size_t x_id = x.id();
  return unary(x, [factor](double v) { return factor * v; }, [x_id, factor](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    auto gx = t.grad_buffer(x_id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
  });
}

Var sum(Var x) {
  Tape& tape = tape_of(x);
  double acc = 0.0;
  for (double v : x.value().data) acc += v;
  const std::size_t x_id = x.id();
  return tape.record(Tensor::scalar(acc), {x_id}, [x_id](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    auto gx = t.grad_buffer(x_id);
    for (double& v : gx) v += g;
  });
}

Var mean(Var x) {
  if (x.size() == 0) throw std::invalid_argument("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Var reshape(Var x, Shape shape) {
  Tape& tape = tape_of(x);
  if (shape_numel(shape) != x.size()) {
    throw GeometryError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                        shape_string(shape));
  }
  Tensor out(std::move(shape), x.value().data);
  const std::size_t x_id = x.id();
  return tape.record(std::move(out), {x_id}, [x_id](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    auto gx = t.grad_buffer(x_id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var linear_map(Var x, Shape out_shape, LinearFn forward, LinearFn adjoint) {
  Tape& tape = tape_of(x);
  Tensor out(std::move(out_shape));
  forward(x.value().data, out.data);
  const std::size_t x_id = x.id();
  return tape.record(std::move(out), {x_id}, [x_id, adjoint = std::move(adjoint)](Tape& t, std::size_t self) {
    const auto g = t.grad(self);
    std::vector<double> back(t.value(x_id).size());
    adjoint(g, back);
    auto gx = t.grad_buffer(x_id);
    for (std::size_t i = 0; i < back.size(); ++i) gx[i] += back[i];
  });
}

}  // namespace ssrecon
