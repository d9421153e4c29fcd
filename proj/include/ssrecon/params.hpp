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
#include <string>
#include <vector>

#include "ssrecon/tensor.hpp"

namespace ssrecon {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
};

// Trainable parameters together with their gradients and Adam moments.
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor init);

  std::size_t size() const { return params_.size(); }
  Parameter& at(std::size_t i) { return params_.at(i); }
  const Parameter& at(std::size_t i) const { return params_.at(i); }
  // Throws std::out_of_range for unknown names.
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }

  std::size_t total_parameter_count() const;
  void zero_grads();
  void reset_adam();

  std::uint64_t step_count = 0;

 private:
  std::vector<Parameter> params_;
};

struct AdamConfig {
  double lr = 5e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// One bias-corrected Adam update. Throws NumericalError naming the first
// parameter whose gradient is not finite; the store is left untouched then.
void adam_step(ParamStore& store, const AdamConfig& cfg);

// Checkpoint layout (little-endian):
//   "TLCK", u32 version, u32 parameter count,
//   per parameter: u16 name length, name bytes, u8 rank, u32 extents, f64 values,
//   per parameter (same order): f64 adam_m values then f64 adam_v values,
//   u64 step count.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store);
ParamStore load_checkpoint(const std::filesystem::path& path);

}  // namespace ssrecon
