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

#include "ssrecon/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ssrecon/errors.hpp"
#include "ssrecon/metrics.hpp"

namespace ssrecon {

namespace {

struct Session {
  const TrainConfig& cfg;
  const SystemMatrix& sm;
  const Sinogram2D& m;
  const std::optional<Image2D>& truth;
  ReconMethod method;
  ParamStore store;
  std::optional<SystemMatrix> test_sm;
};

MetricsRow evaluate(Session& s, int epoch, double loss, Image2D* final_image) {
  MetricsRow row;
  row.epoch = epoch;
  row.loss_total = loss;
  Evaluation train_eval = evaluate_network(s.store, s.method, s.sm, s.m);
  row.pll_train = pll(train_eval.mean_data, s.m);
  if (s.truth) row.rmse_train = rmse(train_eval.image, *s.truth, s.sm.fov_mask());
  if (s.cfg.test_sinogram) {
    if (!s.test_sm) s.test_sm.emplace(geometry_for(*s.cfg.test_sinogram));
    Evaluation test_eval = evaluate_network(s.store, s.method, *s.test_sm, *s.cfg.test_sinogram);
    row.pll_test = pll(test_eval.mean_data, *s.cfg.test_sinogram);
    if (s.cfg.test_truth) row.rmse_test = rmse(test_eval.image, *s.cfg.test_truth, s.test_sm->fov_mask());
  }
  if (final_image) *final_image = std::move(train_eval.image);
  return row;
}

double epoch_loss_and_grad(Session& s, const AugmentSample& sample) {
  const TrainConfig& cfg = s.cfg;
  Tape tape;
  BoundNetwork net(tape, s.store, s.method);
  LossComponents parts;
  if (cfg.weights.alpha > 0.0) {
    Var x = reconstruct(net, s.sm, tape.constant(sample.input.to_tensor()));
    parts.data_fidelity = data_fidelity(net, s.sm, x, sample.target);
    if (cfg.weights.lambda > 0.0) parts.prior = quadratic_smoothness_prior(x, s.sm.fov_mask());
  }
  if (cfg.weights.beta > 0.0) {
    std::vector<Var> qs;
    for (const Sinogram2D& d : cfg.noref_datasets) {
      Var x = reconstruct(net, s.sm, tape.constant(d.to_tensor()));
      qs.push_back(forward_model_output(net, s.sm, x));
    }
    parts.noref = noref_loss(qs, cfg.noref_datasets);
  }
  if (cfg.weights.gamma > 0.0) {
    std::vector<Var> xs;
    std::vector<Image2D> refs;
    for (const ReferencePair& pair : cfg.reference_pairs) {
      xs.push_back(reconstruct(net, s.sm, tape.constant(pair.sinogram.to_tensor())));
      refs.push_back(pair.image);
    }
    parts.ref = ref_loss(xs, refs);
  }
  Var loss = total_loss(cfg.weights, parts);
  const double value = loss.item();
  if (!std::isfinite(value)) return value;
  tape.backward(loss, s.store);
  return value;
}

RunRecord run(Session& s, bool finetuning) {
  const TrainConfig& cfg = s.cfg;
  cfg.validate(finetuning);
  RunRecord record;
  record.config = cfg.describe();
  record.config["method"] = std::string(to_string(s.method.tag));
  record.config["mode"] = finetuning ? "finetune" : "train";
  record.config["parameters"] = std::to_string(s.store.total_parameter_count());

  std::optional<MetricsLog> log;
  if (cfg.out_dir) {
    std::filesystem::create_directories(*cfg.out_dir);
    log.emplace(*cfg.out_dir / "metrics.csv");
  }

  Rng aug_rng = Rng(cfg.seed).split(1);
  Image2D final_image;
  bool have_final = false;
  int epoch = 0;
  for (epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const AugmentSample sample = augment(s.m, aug_rng, cfg.augment);
    const double loss = epoch_loss_and_grad(s, sample);
    if (!std::isfinite(loss)) {
      if (cfg.out_dir) save_checkpoint(*cfg.out_dir / "diag.tlck", s.store);
      throw NumericalError("non-finite loss at epoch " + std::to_string(epoch));
    }
    try {
      adam_step(s.store, cfg.adam);
    } catch (const NumericalError&) {
      if (cfg.out_dir) save_checkpoint(*cfg.out_dir / "diag.tlck", s.store);
      throw;
    }

    const bool last = epoch == cfg.epochs;
    if (epoch % cfg.eval_every == 0 || last) {
      MetricsRow row = evaluate(s, epoch, loss, &final_image);
      have_final = true;
      record.rows.push_back(row);
      if (log) log->append(row);
      if (cfg.on_eval && !cfg.on_eval(row)) {
        record.epochs_run = epoch;
        break;
      }
    } else {
      have_final = false;
    }
    if (cfg.out_dir && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && !last) {
      save_checkpoint(*cfg.out_dir / ("checkpoint_" + std::to_string(epoch) + ".tlck"), s.store);
    }
    record.epochs_run = epoch;
  }
  if (!have_final) final_image = evaluate_network(s.store, s.method, s.sm, s.m).image;
  final_image.label = "final";

  if (cfg.out_dir) {
    record.checkpoint_path = *cfg.out_dir / "checkpoint.tlck";
    save_checkpoint(*record.checkpoint_path, s.store);
    write_image(*cfg.out_dir / "final.t32", final_image);
  }
  record.method = s.method;
  record.store = std::move(s.store);
  record.final_image = std::move(final_image);
  if (cfg.out_dir) write_run_summary(*cfg.out_dir / "summary.txt", record);
  return record;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

void TrainConfig::validate(bool finetuning) const {
  if (epochs < (finetuning ? 0 : 1)) throw std::invalid_argument("epochs must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
  method.validate();
  weights.validate();
  adam.validate();
  augment.validate();
  if (weights.beta > 0.0 && noref_datasets.empty()) {
    throw std::invalid_argument("beta > 0 needs at least one unlabelled dataset");
  }
  if (weights.gamma > 0.0 && reference_pairs.empty()) {
    throw std::invalid_argument("gamma > 0 needs at least one reference pair");
  }
  if (test_truth && !test_sinogram) throw std::invalid_argument("test truth given without test sinogram");
}

std::map<std::string, std::string> TrainConfig::describe() const {
  std::map<std::string, std::string> out;
  out["method"] = std::string(to_string(method.tag));
  out["channels"] = std::to_string(method.spec1.channels);
  out["layers"] = std::to_string(method.spec1.innermost_layers);
  if (method.spec2) {
    out["channels2"] = std::to_string(method.spec2->channels);
    out["layers2"] = std::to_string(method.spec2->innermost_layers);
  }
  out["kernel"] = std::to_string(method.spec1.kernel);
  out["positivity"] = std::string(to_string(method.spec1.positivity));
  out["bpf_loss_space"] = std::string(to_string(method.bpf_loss_space));
  out["alpha"] = fmt(weights.alpha);
  out["beta"] = fmt(weights.beta);
  out["gamma"] = fmt(weights.gamma);
  out["lambda"] = fmt(weights.lambda);
  out["epochs"] = std::to_string(epochs);
  out["lr"] = fmt(adam.lr);
  out["beta1"] = fmt(adam.beta1);
  out["beta2"] = fmt(adam.beta2);
  out["eps"] = fmt(adam.eps);
  out["augment"] = augment.enabled ? "a2" : "none";
  out["augment_scale_high"] = fmt(augment.scale_high);
  out["augment_removal_max"] = fmt(augment.removal_fraction_max);
  out["augment_target"] = augment.target == AugmentTarget::original ? "original" : "rescaled";
  out["seed"] = std::to_string(seed);
  out["eval_every"] = std::to_string(eval_every);
  out["checkpoint_every"] = std::to_string(checkpoint_every);
  out["noref_datasets"] = std::to_string(noref_datasets.size());
  out["reference_pairs"] = std::to_string(reference_pairs.size());
  out["test_sinogram"] = test_sinogram ? "yes" : "no";
  return out;
}

Geometry geometry_for(const Sinogram2D& m) { return Geometry{m.bins, m.bins, m.views}; }

Var data_fidelity(const BoundNetwork& net, const SystemMatrix& sm, Var x, const Sinogram2D& target) {
  Var q = forward_model_output(net, sm, x);
  if (net.method().tag == MethodTag::dl_bpf && net.method().bpf_loss_space == BpfLossSpace::backprojected) {
    const Image2D bp_target = sm.back_project(target);
    return poisson_nll(back_project(sm, q), bp_target.data);
  }
  return poisson_nll(q, target);
}

RunRecord train(const TrainConfig& cfg, const Sinogram2D& m, const std::optional<Image2D>& truth) {
  cfg.method.validate();
  const SystemMatrix sm(geometry_for(m));
  if (truth && truth->n != sm.geometry().n) throw GeometryError("truth image does not match the sinogram");
  Rng init_rng = Rng(cfg.seed).split(0);
  Session s{cfg, sm, m, truth, cfg.method, build_network(cfg.method, init_rng), std::nullopt};
  return run(s, false);
}

RunRecord finetune(ParamStore store, const TrainConfig& cfg, const Sinogram2D& m_new,
                   const std::optional<Image2D>& truth) {
  ReconMethod method = infer_method(store);
  method.bpf_loss_space = cfg.method.bpf_loss_space;
  const SystemMatrix sm(geometry_for(m_new));
  if (truth && truth->n != sm.geometry().n) throw GeometryError("truth image does not match the sinogram");
  if (method.tag == MethodTag::ddl && (m_new.views != m_new.bins)) {
    throw GeometryError("DDL checkpoint needs a square sinogram");
  }
  if (!cfg.carry_adam_state) store.reset_adam();
  TrainConfig effective = cfg;
  effective.method = method;
  Session s{effective, sm, m_new, truth, method, std::move(store), std::nullopt};
  return run(s, true);
}

RunRecord finetune(const std::filesystem::path& checkpoint, const TrainConfig& cfg,
                   const Sinogram2D& m_new, const std::optional<Image2D>& truth) {
  return finetune(load_checkpoint(checkpoint), cfg, m_new, truth);
}

void write_run_summary(const std::filesystem::path& path, const RunRecord& record) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& [k, v] : record.config) out << k << '=' << v << '\n';
  out << "epochs_run=" << record.epochs_run << '\n';
  if (record.checkpoint_path) out << "checkpoint=" << record.checkpoint_path->filename().string() << '\n';
  if (!record.rows.empty()) {
    for (const auto& [k, v] : record.rows.back().named()) out << "final_" << k << '=' << fmt(v) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace ssrecon
