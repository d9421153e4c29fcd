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

#include "ssrecon/params.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "binary_io.hpp"
#include "file_util.hpp"
#include "ssrecon/errors.hpp"

namespace ssrecon {

std::size_t ParamStore::add(std::string name, Tensor init) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  Tensor zeros(init.shape);
  params_.push_back(Parameter{std::move(name), std::move(init), zeros, zeros, zeros});
  return params_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

std::size_t ParamStore::total_parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
}

void ParamStore::reset_adam() {
  for (auto& p : params_) {
    std::fill(p.adam_m.data.begin(), p.adam_m.data.end(), 0.0);
    std::fill(p.adam_v.data.begin(), p.adam_v.data.end(), 0.0);
  }
  step_count = 0;
}

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("Adam learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in (0,1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("Adam eps must be positive");
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  for (const auto& p : store.params()) {
    for (double g : p.grad.data) {
      if (!std::isfinite(g)) {
        throw NumericalError("non-finite gradient in parameter '" + p.name + "'");
      }
    }
  }
  store.step_count += 1;
  const double t = static_cast<double>(store.step_count);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& p : store.params()) {
    auto& w = p.value.data;
    const auto& g = p.grad.data;
    auto& m = p.adam_m.data;
    auto& v = p.adam_v.data;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::string_view kCheckpointMagic = "TLCK";
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store) {
  detail::ByteWriter out;
  out.bytes(kCheckpointMagic);
  out.u32(kCheckpointVersion);
  out.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& p : store.params()) {
    if (p.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw std::invalid_argument("parameter name too long for checkpoint: " + p.name);
    }
    out.u16(static_cast<std::uint16_t>(p.name.size()));
    out.bytes(p.name);
    out.u8(static_cast<std::uint8_t>(p.value.rank()));
    for (std::size_t e : p.value.shape) out.u32(static_cast<std::uint32_t>(e));
    for (double v : p.value.data) out.f64(v);
  }
  for (const auto& p : store.params()) {
    for (double v : p.adam_m.data) out.f64(v);
    for (double v : p.adam_v.data) out.f64(v);
  }
  out.u64(store.step_count);
  detail::write_file(path, out.data());
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  const std::vector<char> buf = detail::read_file(path);
  detail::ByteReader in(buf);
  if (in.bytes(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw FormatError("not a checkpoint file (bad magic)", 0);
  }
  const std::size_t version_at = in.offset();
  if (const auto version = in.u32(); version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  const std::uint32_t count = in.u32();
  ParamStore store;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint16_t name_len = in.u16();
    std::string name = in.bytes(name_len);
    const std::uint8_t rank = in.u8();
    Shape shape(rank);
    std::uint64_t numel = 1;
    for (auto& e : shape) {
      const std::size_t at = in.offset();
      e = in.u32();
      numel *= e;
      if (numel * 8 > in.remaining()) {
        throw FormatError("extent overflow in parameter '" + name + "'", at);
      }
    }
    std::vector<double> values(numel);
    for (double& v : values) v = in.f64();
    const std::size_t at = in.offset();
    try {
      store.add(std::move(name), Tensor(std::move(shape), std::move(values)));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), at);
    }
  }
  for (auto& p : store.params()) {
    for (double& v : p.adam_m.data) v = in.f64();
    for (double& v : p.adam_v.data) v = in.f64();
  }
  store.step_count = in.u64();
  if (in.remaining() != 0) throw FormatError("trailing bytes after checkpoint", in.offset());
  return store;
}

}  // namespace ssrecon
