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

#include "ssrecon/networks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssrecon/errors.hpp"

namespace ssrecon {

namespace {

constexpr double kInitialSlope = 0.25;

std::string pname(MethodTag tag, std::string_view stage, std::string_view leaf) {
  return std::string(to_string(tag)) + "." + std::string(stage) + "." + std::string(leaf);
}

std::string conv_leaf(std::size_t k, std::string_view what) {
  return "conv" + std::to_string(k) + "." + std::string(what);
}

std::string prelu_leaf(std::size_t k) { return "prelu" + std::to_string(k) + ".slope"; }

void add_cnn(ParamStore& store, MethodTag tag, std::string_view stage, const CnnSpec& spec, Rng& rng) {
  const std::size_t c = spec.channels, k = spec.kernel;
  const std::size_t convs = spec.innermost_layers + 2;
  for (std::size_t layer = 0; layer < convs; ++layer) {
    const std::size_t c_in = layer == 0 ? 1 : c;
    const std::size_t c_out = layer + 1 == convs ? 1 : c;
    Tensor w(Shape{c_out, c_in, k, k});
    const double bound = std::sqrt(1.0 / static_cast<double>(c_in * k * k));
    for (double& v : w.data) v = bound * (2.0 * rng.uniform() - 1.0);
    store.add(pname(tag, stage, conv_leaf(layer, "weight")), std::move(w));
    store.add(pname(tag, stage, conv_leaf(layer, "bias")), Tensor(Shape{c_out}));
    if (layer + 1 < convs) store.add(pname(tag, stage, prelu_leaf(layer)), Tensor(Shape{c}, kInitialSlope));
  }
  if (spec.positivity == Positivity::prelu_scalar) {
    store.add(pname(tag, stage, "positivity.slope"), Tensor(Shape{1}, kInitialSlope));
  }
}

Tensor image_constant(const Image2D& img) { return img.to_tensor(); }

// mask / s where s > 0 inside the FOV, 0 elsewhere.
Tensor masked_reciprocal(const Image2D& denom, const Image2D& mask) {
  Tensor t(Shape{1, denom.n, denom.n});
  for (std::size_t p = 0; p < denom.data.size(); ++p) {
    t.data[p] = (mask.data[p] > 0.0 && denom.data[p] > 0.0) ? 1.0 / denom.data[p] : 0.0;
  }
  return t;
}

void require_sinogram_input(const SystemMatrix& sm, const Var& m) {
  const Geometry& g = sm.geometry();
  if (m.shape() != Shape{1, g.v, g.r}) {
    throw GeometryError("sinogram input " + shape_string(m.shape()) + " does not match geometry " +
                        shape_string({1, g.v, g.r}));
  }
}

}  // namespace

void CnnSpec::validate() const {
  if (channels == 0) throw std::invalid_argument("CNN needs at least one channel");
  if (kernel == 0 || kernel % 2 == 0) throw std::invalid_argument("CNN kernel must be odd");
}

std::size_t CnnSpec::parameter_count() const {
  const std::size_t c = channels, k2 = kernel * kernel, l = innermost_layers;
  const std::size_t slope = positivity == Positivity::prelu_scalar ? 1 : 0;
  return (c * k2 + c) + l * (c * c * k2 + c) + (c * k2 + 1) + (l + 1) * c + slope;
}

ReconMethod ReconMethod::make(MethodTag tag, std::size_t channels, std::size_t layers, std::size_t kernel) {
  ReconMethod m;
  m.tag = tag;
  m.spec1 = CnnSpec{channels, layers, kernel, Positivity::abs};
  if (tag == MethodTag::dl_fbp_f) {
    m.spec1.positivity = Positivity::prelu_scalar;
    m.spec2 = CnnSpec{channels, layers, kernel, Positivity::none};
  }
  return m;
}

void ReconMethod::validate() const {
  spec1.validate();
  if ((tag == MethodTag::dl_fbp_f) != spec2.has_value()) {
    throw std::invalid_argument("an image-domain CNN is required for DL-FBP-F and only for it");
  }
  if (spec2) spec2->validate();
}

std::size_t ReconMethod::parameter_count() const {
  return spec1.parameter_count() + (spec2 ? spec2->parameter_count() : 0);
}

bool ReconMethod::image_nonnegative() const {
  const Positivity last = spec2 ? spec2->positivity : spec1.positivity;
  return last == Positivity::abs || last == Positivity::relu;
}

MethodTag parse_method_tag(std::string_view name) {
  if (name == "dl-fbp" || name == "dl_fbp") return MethodTag::dl_fbp;
  if (name == "dl-fbp-f" || name == "dl_fbp_f") return MethodTag::dl_fbp_f;
  if (name == "dl-bpf" || name == "dl_bpf") return MethodTag::dl_bpf;
  if (name == "ddl") return MethodTag::ddl;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(MethodTag tag) {
  switch (tag) {
    case MethodTag::dl_fbp: return "dl_fbp";
    case MethodTag::dl_fbp_f: return "dl_fbp_f";
    case MethodTag::dl_bpf: return "dl_bpf";
    case MethodTag::ddl: return "ddl";
  }
  return "?";
}

std::string_view to_string(Positivity p) {
  switch (p) {
    case Positivity::abs: return "abs";
    case Positivity::prelu_scalar: return "prelu_scalar";
    case Positivity::relu: return "relu";
    case Positivity::none: return "none";
  }
  return "?";
}

std::string_view to_string(BpfLossSpace s) {
  return s == BpfLossSpace::sinogram ? "sinogram" : "backprojected";
}

Positivity parse_positivity(std::string_view name) {
  for (Positivity p : {Positivity::abs, Positivity::prelu_scalar, Positivity::relu, Positivity::none}) {
    if (name == to_string(p)) return p;
  }
  throw std::invalid_argument("unknown positivity '" + std::string(name) + "'");
}

BpfLossSpace parse_bpf_loss_space(std::string_view name) {
  if (name == "sinogram") return BpfLossSpace::sinogram;
  if (name == "backprojected") return BpfLossSpace::backprojected;
  throw std::invalid_argument("unknown DL-BPF loss space '" + std::string(name) + "'");
}

ParamStore build_network(const ReconMethod& method, Rng& rng) {
  method.validate();
  ParamStore store;
  add_cnn(store, method.tag, "f1", method.spec1, rng);
  if (method.spec2) add_cnn(store, method.tag, "f2", *method.spec2, rng);
  return store;
}

ReconMethod infer_method(const ParamStore& store) {
  if (store.size() == 0) throw std::invalid_argument("empty parameter store");
  const std::string& first = store.at(0).name;
  const MethodTag tag = parse_method_tag(first.substr(0, first.find('.')));
  ReconMethod method = ReconMethod::make(tag, 1, 0);

  auto infer_stage = [&](std::string_view stage, CnnSpec& spec) {
    const std::string w0 = pname(tag, stage, conv_leaf(0, "weight"));
    if (!store.contains(w0)) throw std::invalid_argument("store has no stage " + std::string(stage));
    const Shape& s = store.at(store.index_of(w0)).value.shape;
    if (s.size() != 4) throw std::invalid_argument("malformed weight " + w0);
    spec.channels = s[0];
    spec.kernel = s[2];
    std::size_t convs = 1;
    while (store.contains(pname(tag, stage, conv_leaf(convs, "weight")))) ++convs;
    if (convs < 2) throw std::invalid_argument("stage " + std::string(stage) + " has a single conv");
    spec.innermost_layers = convs - 2;
    if (store.contains(pname(tag, stage, "positivity.slope"))) {
      spec.positivity = Positivity::prelu_scalar;
    } else if (spec.positivity == Positivity::prelu_scalar) {
      spec.positivity = Positivity::abs;
    }
  };
  infer_stage("f1", method.spec1);
  if (method.spec2) infer_stage("f2", *method.spec2);
  if (method.parameter_count() != store.total_parameter_count()) {
    throw std::invalid_argument("parameter store does not match the inferred " +
                                std::string(to_string(tag)) + " architecture");
  }
  return method;
}

BoundNetwork::BoundNetwork(Tape& tape, ParamStore& store, ReconMethod method, bool trainable)
    : tape_(&tape), store_(&store), method_(std::move(method)) {
  vars_.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    vars_.push_back(trainable ? tape.parameter(store, i) : tape.constant(store.at(i).value));
  }
}

Var BoundNetwork::param(const std::string& name) const { return vars_.at(store_->index_of(name)); }

Var apply_cnn(const BoundNetwork& net, std::string_view stage, const CnnSpec& spec, Var input) {
  const MethodTag tag = net.method().tag;
  const std::size_t convs = spec.innermost_layers + 2;
  Var h = input;
  for (std::size_t layer = 0; layer < convs; ++layer) {
    h = conv2d(h, net.param(pname(tag, stage, conv_leaf(layer, "weight"))),
               net.param(pname(tag, stage, conv_leaf(layer, "bias"))));
    if (layer + 1 < convs) h = prelu(h, net.param(pname(tag, stage, prelu_leaf(layer))));
  }
  return h;
}

Var apply_positivity(const BoundNetwork& net, std::string_view stage, Positivity p, Var input) {
  switch (p) {
    case Positivity::abs: return abs(input);
    case Positivity::relu: return relu(input);
    case Positivity::prelu_scalar:
      return prelu(input, net.param(pname(net.method().tag, stage, "positivity.slope")));
    case Positivity::none: return input;
  }
  return input;
}

Var reconstruct_dl_fbp(const BoundNetwork& net, const SystemMatrix& sm, Var m) {
  require_sinogram_input(sm, m);
  const ReconMethod& method = net.method();
  Tape& tape = net.tape();
  Var filtered = apply_cnn(net, "f1", method.spec1, m);
  Var inv_sens = tape.constant(masked_reciprocal(sm.sensitivity_image(), sm.fov_mask()));
  Var normalised = mul(back_project(sm, filtered), inv_sens);
  return apply_positivity(net, "f1", method.spec1.positivity, normalised);
}

Var reconstruct_dl_fbp_f(const BoundNetwork& net, const SystemMatrix& sm, Var m) {
  const ReconMethod& method = net.method();
  if (!method.spec2) throw std::invalid_argument("DL-FBP-F needs an image-domain CNN");
  Var stage1 = reconstruct_dl_fbp(net, sm, m);
  Var x = apply_cnn(net, "f2", *method.spec2, stage1);
  x = apply_positivity(net, "f2", method.spec2->positivity, x);
  return mul(x, net.tape().constant(image_constant(sm.fov_mask())));
}

Var reconstruct_dl_bpf(const BoundNetwork& net, const SystemMatrix& sm, Var m) {
  require_sinogram_input(sm, m);
  const ReconMethod& method = net.method();
  Tape& tape = net.tape();
  Var filtered = apply_cnn(net, "f1", method.spec1, back_project(sm, m));
  Var inv_sens = tape.constant(masked_reciprocal(sm.bpf_sensitivity(), sm.fov_mask()));
  return apply_positivity(net, "f1", method.spec1.positivity, mul(filtered, inv_sens));
}

Var reconstruct_ddl(const BoundNetwork& net, const SystemMatrix& sm, Var m) {
  require_sinogram_input(sm, m);
  const Geometry& g = sm.geometry();
  if (g.v != g.n || g.r != g.n) {
    throw GeometryError("DDL maps a sinogram straight to an image and needs v = r = n");
  }
  const ReconMethod& method = net.method();
  Var x = apply_positivity(net, "f1", method.spec1.positivity, apply_cnn(net, "f1", method.spec1, m));
  return mul(x, net.tape().constant(image_constant(sm.fov_mask())));
}

Var reconstruct(const BoundNetwork& net, const SystemMatrix& sm, Var m) {
  switch (net.method().tag) {
    case MethodTag::dl_fbp: return reconstruct_dl_fbp(net, sm, m);
    case MethodTag::dl_fbp_f: return reconstruct_dl_fbp_f(net, sm, m);
    case MethodTag::dl_bpf: return reconstruct_dl_bpf(net, sm, m);
    case MethodTag::ddl: return reconstruct_ddl(net, sm, m);
  }
  throw std::logic_error("unhandled method");
}

Var forward_model_output(const SystemMatrix& sm, Var x, bool apply_abs) {
  Var q = forward_project(sm, x);
  return apply_abs ? abs(q) : q;
}

Var forward_model_output(const BoundNetwork& net, const SystemMatrix& sm, Var x) {
  const ReconMethod& method = net.method();
  return forward_model_output(sm, x, method.abs_on_projection && !method.image_nonnegative());
}

Evaluation evaluate_network(ParamStore& store, const ReconMethod& method, const SystemMatrix& sm,
                            const Sinogram2D& m) {
  Tape tape;
  BoundNetwork net(tape, store, method, false);
  Var x = reconstruct(net, sm, tape.constant(m.to_tensor()));
  Var q = forward_model_output(net, sm, x);
  Evaluation out{Image2D::from_tensor(x.value()), Sinogram2D::from_tensor(q.value())};
  return out;
}

}  // namespace ssrecon
