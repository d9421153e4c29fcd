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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssrecon/augmentation.hpp"
#include "ssrecon/data_io.hpp"
#include "ssrecon/losses.hpp"
#include "ssrecon/networks.hpp"
#include "ssrecon/params.hpp"

namespace ssrecon {

struct ReferencePair {
  Sinogram2D sinogram;
  Image2D image;
};

struct TrainConfig {
  ReconMethod method;
  LossWeights weights;
  int epochs = 1;
  AdamConfig adam;
  AugmentConfig augment;
  std::uint64_t seed = 0;
  int eval_every = 1;
  // Periodic checkpoints (0: only the final one). Needs out_dir.
  int checkpoint_every = 0;
  // When set, receives metrics.csv, final.t32, checkpoint.tlck, summary.txt.
  std::optional<std::filesystem::path> out_dir;

  // Passed through the current network at every evaluation, never trained on.
  std::optional<Sinogram2D> test_sinogram;
  std::optional<Image2D> test_truth;

  std::vector<Sinogram2D> noref_datasets;       // β term
  std::vector<ReferencePair> reference_pairs;   // γ term

  // Finetuning only: keep the checkpoint's Adam moments instead of resetting.
  bool carry_adam_state = false;

  // Called after every evaluation; returning false ends training early.
  std::function<bool(const MetricsRow&)> on_eval;

  // `finetuning` allows zero epochs.
  void validate(bool finetuning = false) const;
  // key=value echo of the configuration.
  std::map<std::string, std::string> describe() const;
};

struct RunRecord {
  std::map<std::string, std::string> config;
  std::vector<MetricsRow> rows;
  std::optional<std::filesystem::path> checkpoint_path;
  ReconMethod method;
  ParamStore store;
  Image2D final_image;
  int epochs_run = 0;
};

// Self-supervised training from a fresh network. Per epoch: draw an
// augmentation sample (or the identity), evaluate the total loss, take one
// Adam step. Every eval_every epochs the current network is evaluated on the
// un-augmented m (and on the test sinogram, if any).
// Throws NumericalError on a non-finite loss after writing diag.tlck to out_dir.
RunRecord train(const TrainConfig& cfg, const Sinogram2D& m,
                const std::optional<Image2D>& truth = std::nullopt);

// Continues training of an existing network on new data. The architecture is
// taken from the store; cfg.method only contributes its DL-BPF loss space.
RunRecord finetune(ParamStore store, const TrainConfig& cfg, const Sinogram2D& m_new,
                   const std::optional<Image2D>& truth = std::nullopt);
RunRecord finetune(const std::filesystem::path& checkpoint, const TrainConfig& cfg,
                   const Sinogram2D& m_new, const std::optional<Image2D>& truth = std::nullopt);

// The geometry implied by a sinogram: n = r = bins, v = views.
Geometry geometry_for(const Sinogram2D& m);

// Data-fidelity term for a reconstruction x (sinogram or, for DL-BPF if so
// configured, backprojected space).
Var data_fidelity(const BoundNetwork& net, const SystemMatrix& sm, Var x, const Sinogram2D& target);

void write_run_summary(const std::filesystem::path& path, const RunRecord& record);

}  // namespace ssrecon
