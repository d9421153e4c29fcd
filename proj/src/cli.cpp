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

#include "ssrecon/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssrecon/augmentation.hpp"
#include "ssrecon/data_io.hpp"
#include "ssrecon/errors.hpp"
#include "ssrecon/metrics.hpp"
#include "ssrecon/mlem.hpp"
#include "ssrecon/networks.hpp"
#include "ssrecon/params.hpp"
#include "ssrecon/rng.hpp"
#include "ssrecon/system_model.hpp"
#include "ssrecon/trainer.hpp"

namespace ssrecon {
namespace {

namespace fs = std::filesystem;
using Settings = std::map<std::string, std::string>;

constexpr double kAdjointTolerance = 1e-10;

// Flag combinations that parse but make no sense together.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tracks whether the settings have been echoed. Errors raised while
// resolving flags are usage errors, later ones concern the data.
struct Context {
  std::ostream& out;
  bool running = false;

  void begin(const Settings& settings) {
    for (const auto& [k, v] : settings) out << k << '=' << v << '\n';
    out.flush();
    running = true;
  }
};

std::string num(double v) { return format_double(v); }

Geometry geometry_from_flags(std::size_t n, std::size_t views, std::size_t bins) {
  const Geometry g{n, bins ? bins : n, views ? views : n};
  g.validate();
  return g;
}

struct PhantomOpts {
  std::string kind;
  std::size_t size = 96;
  double activity = 1e6;
  std::string out;
  std::string pgm;
};

int run_phantom(Context& ctx, const PhantomOpts& o) {
  const PhantomKind kind = parse_phantom_kind(o.kind);
  if (o.size < kMinPhantomSize) throw UsageError("--size must be at least " + std::to_string(kMinPhantomSize));
  if (!std::isfinite(o.activity) || o.activity < 0.0) throw UsageError("--activity must be finite and >= 0");
  Settings s{{"command", "phantom"}, {"kind", std::string(to_string(kind))}, {"size", std::to_string(o.size)},
             {"activity", num(o.activity)}, {"out", o.out}};
  if (!o.pgm.empty()) s["pgm"] = o.pgm;
  ctx.begin(s);
  const Image2D x = make_phantom(kind, o.size, o.activity);
  write_image(o.out, x);
  if (!o.pgm.empty()) write_pgm(o.pgm, x.to_array());
  ctx.out << "total=" << num(x.sum()) << '\n';
  return kExitOk;
}

struct ProjectOpts {
  std::string image;
  std::string out;
  std::size_t views = 0;
  std::size_t bins = 0;
};

int run_project(Context& ctx, const ProjectOpts& o) {
  ctx.begin({{"command", "project"}, {"image", o.image}, {"out", o.out},
             {"views", o.views ? std::to_string(o.views) : "n"}, {"bins", o.bins ? std::to_string(o.bins) : "n"}});
  const Image2D x = read_image(o.image);
  const SystemMatrix sm(geometry_from_flags(x.n, o.views, o.bins));
  const Sinogram2D s = sm.forward_project(x);
  write_sinogram(o.out, s);
  ctx.out << "views=" << s.views << "\nbins=" << s.bins << "\ntotal=" << num(s.sum()) << '\n';
  return kExitOk;
}

struct NoiseOpts {
  std::string sino;
  std::string out;
  std::uint64_t seed = 0;
};

int run_noise(Context& ctx, const NoiseOpts& o) {
  ctx.begin({{"command", "noise"}, {"sino", o.sino}, {"out", o.out}, {"seed", std::to_string(o.seed)}});
  Rng rng(o.seed);
  const Sinogram2D noisy = poisson_sample(read_sinogram(o.sino), rng);
  write_sinogram(o.out, noisy);
  ctx.out << "total=" << num(noisy.sum()) << '\n';
  return kExitOk;
}

struct MlemOpts {
  std::string sino;
  std::string out;
  std::string metrics;
  std::string truth;
  int iters = 500;
};

int run_mlem(Context& ctx, const MlemOpts& o) {
  if (o.iters < 1) throw UsageError("--iters must be at least 1");
  Settings s{{"command", "mlem"}, {"sino", o.sino}, {"out", o.out}, {"iters", std::to_string(o.iters)}};
  if (!o.metrics.empty()) s["metrics"] = o.metrics;
  if (!o.truth.empty()) s["truth"] = o.truth;
  ctx.begin(s);
  const Sinogram2D m = read_sinogram(o.sino);
  const SystemMatrix sm(geometry_for(m));
  std::optional<Image2D> truth;
  if (!o.truth.empty()) truth = read_image(o.truth);
  std::optional<MetricsLog> log;
  if (!o.metrics.empty()) log.emplace(o.metrics);
  MlemState state = mlem_init(sm);
  MetricsRow row;
  for (int k = 0; k < o.iters; ++k) {
    mlem_iterate(state, sm, m);
    row.epoch = state.iteration;
    row.pll_train = state.pll_history.back();
    if (truth) row.rmse_train = rmse(state.x, *truth);
    if (log) log->append(row);
  }
  write_image(o.out, state.x);
  for (const auto& [k, v] : row.named()) ctx.out << "final_" << k << '=' << num(v) << '\n';
  return kExitOk;
}

struct TrainOpts {
  std::string method;
  std::string sino;
  std::string truth;
  std::string test_sino;
  std::string test_truth;
  std::string out_dir;
  std::string checkpoint;  // finetune only
  int epochs = 0;
  double lr = 5e-6;
  std::size_t channels = 192;
  std::size_t layers = 4;
  std::size_t kernel = 9;
  std::string augment = "none";
  std::string augment_target = "original";
  double scale_high = 10.0;
  double removal_max = 0.25;
  double alpha = 1.0;
  double beta = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  int eval_every = 1;
  int checkpoint_every = 0;
  std::vector<std::string> noref;
  std::vector<std::string> ref_sino;
  std::vector<std::string> ref_image;
  std::string bpf_loss = "sinogram";
  bool carry_adam = false;
  const CLI::Option* layers_flag = nullptr;
};

void add_training_flags(CLI::App* sub, TrainOpts& o, bool finetuning) {
  sub->add_option("--sino", o.sino, "Training sinogram (T32)")->required();
  sub->add_option("--truth", o.truth, "Ground-truth image for RMSE logging");
  sub->add_option("--test-sino", o.test_sino, "Held-out sinogram, evaluated but never trained on");
  sub->add_option("--test-truth", o.test_truth, "Ground truth for the held-out sinogram");
  sub->add_option("--epochs", o.epochs, "Number of Adam steps")->required();
  sub->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  sub->add_option("--augment", o.augment, "none or a2")->capture_default_str();
  sub->add_option("--augment-target", o.augment_target, "original or rescaled")->capture_default_str();
  sub->add_option("--scale-high", o.scale_high, "Upper bound of the rescaling factor")->capture_default_str();
  sub->add_option("--removal-max", o.removal_max, "Largest fraction of bins removed")->capture_default_str();
  sub->add_option("--alpha", o.alpha, "Weight of the data term")->capture_default_str();
  sub->add_option("--beta", o.beta, "Weight of the unlabelled datasets")->capture_default_str();
  sub->add_option("--gamma", o.gamma, "Weight of the reference pairs")->capture_default_str();
  sub->add_option("--lambda", o.lambda, "Smoothness prior weight")->capture_default_str();
  sub->add_option("--seed", o.seed, "Seed for initialisation and augmentation")->capture_default_str();
  sub->add_option("--out-dir", o.out_dir, "Output directory")->required();
  sub->add_option("--eval-every", o.eval_every, "Epochs between metric rows")->capture_default_str();
  sub->add_option("--checkpoint-every", o.checkpoint_every, "Epochs between numbered checkpoints, 0 for none")
      ->capture_default_str();
  sub->add_option("--noref", o.noref, "Unlabelled sinogram, repeatable");
  sub->add_option("--ref-sino", o.ref_sino, "Reference sinogram, repeatable, paired with --ref-image");
  sub->add_option("--ref-image", o.ref_image, "Reference image, repeatable");
  sub->add_option("--bpf-loss", o.bpf_loss, "DL-BPF loss space: sinogram or backprojected")->capture_default_str();
  if (finetuning) {
    sub->add_option("--checkpoint", o.checkpoint, "Checkpoint to start from")->required();
    sub->add_flag("--carry-adam", o.carry_adam, "Keep the checkpoint's Adam moments");
  } else {
    sub->add_option("--method", o.method, "dl_fbp, dl_fbp_f, dl_bpf or ddl")->required();
    sub->add_option("--channels", o.channels, "Feature channels per conv")->capture_default_str();
    o.layers_flag = sub->add_option("--layers", o.layers, "Innermost layers (per CNN for dl_fbp_f, default 2)")
                        ->capture_default_str();
    sub->add_option("--kernel", o.kernel, "Odd conv kernel size")->capture_default_str();
  }
}

TrainConfig resolve_training(const TrainOpts& o, bool finetuning) {
  if (finetuning ? o.epochs < 0 : o.epochs < 1) {
    throw UsageError(finetuning ? "--epochs must be >= 0" : "--epochs must be >= 1");
  }
  if (o.augment != "none" && o.augment != "a2") throw UsageError("--augment must be none or a2");
  if (o.augment_target != "original" && o.augment_target != "rescaled") {
    throw UsageError("--augment-target must be original or rescaled");
  }
  if (o.gamma > 0.0 && o.ref_sino.empty()) throw UsageError("--gamma > 0 needs at least one --ref-sino/--ref-image pair");
  if (o.ref_sino.size() != o.ref_image.size()) throw UsageError("--ref-sino and --ref-image must pair up");
  if (o.beta > 0.0 && o.noref.empty()) throw UsageError("--beta > 0 needs at least one --noref sinogram");
  if (!o.test_truth.empty() && o.test_sino.empty()) throw UsageError("--test-truth needs --test-sino");

  TrainConfig cfg;
  if (!finetuning) {
    const MethodTag tag = parse_method_tag(o.method);
    const bool default_layers = o.layers_flag == nullptr || o.layers_flag->count() == 0;
    const std::size_t layers = default_layers && tag == MethodTag::dl_fbp_f ? 2 : o.layers;
    cfg.method = ReconMethod::make(tag, o.channels, layers, o.kernel);
  }
  cfg.method.bpf_loss_space = parse_bpf_loss_space(o.bpf_loss);
  cfg.weights = LossWeights{o.alpha, o.beta, o.gamma, o.lambda};
  cfg.epochs = o.epochs;
  cfg.adam.lr = o.lr;
  cfg.augment.enabled = o.augment == "a2";
  cfg.augment.target = o.augment_target == "rescaled" ? AugmentTarget::rescaled : AugmentTarget::original;
  cfg.augment.scale_high = o.scale_high;
  cfg.augment.removal_fraction_max = o.removal_max;
  cfg.seed = o.seed;
  cfg.eval_every = o.eval_every;
  cfg.checkpoint_every = o.checkpoint_every;
  cfg.out_dir = fs::path(o.out_dir);
  cfg.carry_adam_state = o.carry_adam;
  cfg.method.validate();
  cfg.weights.validate();
  cfg.adam.validate();
  cfg.augment.validate();
  if (cfg.eval_every < 1) throw UsageError("--eval-every must be >= 1");
  if (cfg.checkpoint_every < 0) throw UsageError("--checkpoint-every must be >= 0");
  return cfg;
}

Settings training_settings(const TrainConfig& cfg, const TrainOpts& o, bool finetuning) {
  Settings s = cfg.describe();
  s["command"] = finetuning ? "finetune" : "train";
  if (finetuning) {
    // The architecture comes from the checkpoint.
    for (const char* k : {"method", "channels", "layers", "channels2", "layers2", "kernel", "positivity"}) s.erase(k);
    s["checkpoint"] = o.checkpoint;
    s["carry_adam"] = o.carry_adam ? "yes" : "no";
  }
  s["sino"] = o.sino;
  s["out_dir"] = o.out_dir;
  s["truth"] = o.truth.empty() ? "none" : o.truth;
  s["test_sinogram"] = o.test_sino.empty() ? "none" : o.test_sino;
  s["test_truth"] = o.test_truth.empty() ? "none" : o.test_truth;
  s["noref_datasets"] = std::to_string(o.noref.size());
  s["reference_pairs"] = std::to_string(o.ref_sino.size());
  return s;
}

void load_training_data(TrainConfig& cfg, const TrainOpts& o) {
  if (!o.test_sino.empty()) cfg.test_sinogram = read_sinogram(o.test_sino);
  if (!o.test_truth.empty()) cfg.test_truth = read_image(o.test_truth);
  for (const auto& p : o.noref) cfg.noref_datasets.push_back(read_sinogram(p));
  for (std::size_t k = 0; k < o.ref_sino.size(); ++k) {
    cfg.reference_pairs.push_back({read_sinogram(o.ref_sino[k]), read_image(o.ref_image[k])});
  }
}

void report_run(std::ostream& out, const RunRecord& r) {
  out << "epochs_run=" << r.epochs_run << '\n';
  if (!r.rows.empty()) {
    for (const auto& [k, v] : r.rows.back().named()) out << "final_" << k << '=' << num(v) << '\n';
  }
}

int run_train(Context& ctx, const TrainOpts& o, bool finetuning) {
  TrainConfig cfg = resolve_training(o, finetuning);
  ctx.begin(training_settings(cfg, o, finetuning));
  load_training_data(cfg, o);
  const Sinogram2D m = read_sinogram(o.sino);
  std::optional<Image2D> truth;
  if (!o.truth.empty()) truth = read_image(o.truth);
  const RunRecord r = finetuning ? finetune(fs::path(o.checkpoint), cfg, m, truth) : train(cfg, m, truth);
  report_run(ctx.out, r);
  return kExitOk;
}

struct ReconstructOpts {
  std::string checkpoint;
  std::string sino;
  std::string out;
};

int run_reconstruct(Context& ctx, const ReconstructOpts& o) {
  ctx.begin({{"command", "reconstruct"}, {"checkpoint", o.checkpoint}, {"sino", o.sino}, {"out", o.out}});
  ParamStore store = load_checkpoint(o.checkpoint);
  const ReconMethod method = infer_method(store);
  const Sinogram2D m = read_sinogram(o.sino);
  const SystemMatrix sm(geometry_for(m));
  const Evaluation e = evaluate_network(store, method, sm, m);
  write_image(o.out, e.image);
  ctx.out << "method=" << to_string(method.tag) << "\npll=" << num(pll(e.mean_data, m)) << '\n';
  return kExitOk;
}

struct EvalOpts {
  std::string image;
  std::string reference;
  std::string sino;
};

int run_eval(Context& ctx, const EvalOpts& o) {
  ctx.begin({{"command", "eval"}, {"image", o.image}, {"reference", o.reference},
             {"sino", o.sino.empty() ? "none" : o.sino}});
  const Image2D x = read_image(o.image);
  const Image2D ref = read_image(o.reference);
  const double e = rmse(x, ref);
  std::string likelihood;
  if (!o.sino.empty()) {
    // Mean data |Ax|, the model every reconstruction is scored under.
    const Sinogram2D m = read_sinogram(o.sino);
    const SystemMatrix sm(geometry_for(m));
    if (x.n != sm.geometry().n) throw GeometryError("image size does not match the sinogram geometry");
    Sinogram2D q = sm.forward_project(x);
    for (double& v : q.data) v = std::fabs(v);
    likelihood = num(pll(q, m));
  }
  ctx.out << "rmse_percent,pll\n" << num(e) << ',' << likelihood << '\n';
  return kExitOk;
}

struct AugmentOpts {
  std::string sino;
  std::string out_dir;
  std::uint64_t seed = 0;
  int count = 4;
  double scale_high = 10.0;
  double removal_max = 0.25;
  std::string target = "original";
};

int run_augment_preview(Context& ctx, const AugmentOpts& o) {
  if (o.count < 1) throw UsageError("--count must be >= 1");
  if (o.target != "original" && o.target != "rescaled") throw UsageError("--target must be original or rescaled");
  AugmentConfig cfg;
  cfg.enabled = true;
  cfg.scale_high = o.scale_high;
  cfg.removal_fraction_max = o.removal_max;
  cfg.target = o.target == "rescaled" ? AugmentTarget::rescaled : AugmentTarget::original;
  cfg.validate();
  ctx.begin({{"command", "augment-preview"}, {"sino", o.sino}, {"out_dir", o.out_dir},
             {"seed", std::to_string(o.seed)}, {"count", std::to_string(o.count)},
             {"scale_high", num(o.scale_high)}, {"removal_max", num(o.removal_max)}, {"target", o.target}});
  const Sinogram2D m = read_sinogram(o.sino);
  fs::create_directories(o.out_dir);
  Rng rng(o.seed);
  ctx.out << "index,strategy,scale,removed,input_total,target_total\n";
  for (int k = 1; k <= o.count; ++k) {
    const AugmentSample a = augment(m, rng, cfg);
    const std::string stem = "augment_" + std::to_string(k);
    const fs::path dir(o.out_dir);
    write_sinogram(dir / (stem + ".t32"), a.input);
    write_sinogram(dir / (stem + "_target.t32"), a.target);
    write_pgm(dir / (stem + ".pgm"), a.input.to_array());
    ctx.out << k << ',' << to_string(a.strategy) << ',' << num(a.scale) << ',' << a.removed << ','
            << num(a.input.sum()) << ',' << num(a.target.sum()) << '\n';
  }
  return kExitOk;
}

struct AdjointOpts {
  std::size_t size = 96;
  std::size_t views = 0;
  std::size_t bins = 0;
  int trials = 20;
  std::uint64_t seed = 0;
};

int run_adjoint_test(Context& ctx, const AdjointOpts& o) {
  if (o.trials < 1) throw UsageError("--trials must be >= 1");
  const Geometry g = geometry_from_flags(o.size, o.views, o.bins);
  ctx.begin({{"command", "adjoint-test"}, {"n", std::to_string(g.n)}, {"bins", std::to_string(g.r)},
             {"views", std::to_string(g.v)}, {"trials", std::to_string(o.trials)}, {"seed", std::to_string(o.seed)}});
  const double e = adjoint_error(SystemMatrix(g), o.trials, o.seed);
  const bool ok = e < kAdjointTolerance;
  ctx.out << "max_relative_error=" << num(e) << "\ntolerance=" << num(kAdjointTolerance)
          << "\nresult=" << (ok ? "pass" : "fail") << '\n';
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-supervised tomographic reconstruction with learned system-model networks", "ssrecon"};
  app.require_subcommand(1, 1);

  PhantomOpts ph;
  CLI::App* phantom = app.add_subcommand("phantom", "Write a synthetic activity image");
  phantom->add_option("--kind", ph.kind, "disks, bars or brainlike")->required();
  phantom->add_option("--size", ph.size, "Image side in pixels")->capture_default_str();
  phantom->add_option("--activity", ph.activity, "Total activity")->capture_default_str();
  phantom->add_option("--out", ph.out, "Output image (T32)")->required();
  phantom->add_option("--pgm", ph.pgm, "Also write an 8-bit preview");

  ProjectOpts pr;
  CLI::App* project = app.add_subcommand("project", "Forward project an image");
  project->add_option("--image", pr.image, "Input image (T32)")->required();
  project->add_option("--out", pr.out, "Output sinogram (T32)")->required();
  project->add_option("--views", pr.views, "Number of views, default the image side");
  project->add_option("--bins", pr.bins, "Radial bins per view, default the image side");

  NoiseOpts no;
  CLI::App* noise = app.add_subcommand("noise", "Draw Poisson counts around a mean sinogram");
  noise->add_option("--sino", no.sino, "Mean sinogram (T32)")->required();
  noise->add_option("--out", no.out, "Output sinogram (T32)")->required();
  noise->add_option("--seed", no.seed, "Random seed")->capture_default_str();

  MlemOpts ml;
  CLI::App* mlem = app.add_subcommand("mlem", "MLEM reconstruction");
  mlem->add_option("--sino", ml.sino, "Measured sinogram (T32)")->required();
  mlem->add_option("--out", ml.out, "Output image (T32)")->required();
  mlem->add_option("--iters", ml.iters, "Iterations")->capture_default_str();
  mlem->add_option("--metrics", ml.metrics, "Per-iteration metrics CSV");
  mlem->add_option("--truth", ml.truth, "Ground truth for RMSE");

  TrainOpts tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a reconstruction network");
  add_training_flags(train_cmd, tr, false);

  TrainOpts ft;
  CLI::App* finetune_cmd = app.add_subcommand("finetune", "Continue training a checkpoint on new data");
  add_training_flags(finetune_cmd, ft, true);

  ReconstructOpts rc;
  CLI::App* reconstruct_cmd = app.add_subcommand("reconstruct", "Pass a sinogram through a checkpoint");
  reconstruct_cmd->add_option("--checkpoint", rc.checkpoint, "Checkpoint (TLCK)")->required();
  reconstruct_cmd->add_option("--sino", rc.sino, "Sinogram (T32)")->required();
  reconstruct_cmd->add_option("--out", rc.out, "Output image (T32)")->required();

  EvalOpts ev;
  CLI::App* eval = app.add_subcommand("eval", "Print RMSE% and PLL as a CSV row");
  eval->add_option("--image", ev.image, "Image to score (T32)")->required();
  eval->add_option("--reference", ev.reference, "Reference image (T32)")->required();
  eval->add_option("--sino", ev.sino, "Measured sinogram for the PLL column");

  AugmentOpts au;
  CLI::App* augment_cmd = app.add_subcommand("augment-preview", "Write self-augmented sinogram samples");
  augment_cmd->add_option("--sino", au.sino, "Sinogram (T32)")->required();
  augment_cmd->add_option("--out-dir", au.out_dir, "Output directory")->required();
  augment_cmd->add_option("--seed", au.seed, "Random seed")->capture_default_str();
  augment_cmd->add_option("--count", au.count, "Number of samples")->capture_default_str();
  augment_cmd->add_option("--scale-high", au.scale_high, "Upper bound of the rescaling factor")->capture_default_str();
  augment_cmd->add_option("--removal-max", au.removal_max, "Largest fraction of bins removed")->capture_default_str();
  augment_cmd->add_option("--target", au.target, "original or rescaled")->capture_default_str();

  AdjointOpts ad;
  CLI::App* adjoint = app.add_subcommand("adjoint-test", "Check <Ax,y> = <x,Aᵀy> on random pairs");
  adjoint->add_option("--size", ad.size, "Image side")->capture_default_str();
  adjoint->add_option("--views", ad.views, "Number of views, default the image side");
  adjoint->add_option("--bins", ad.bins, "Radial bins, default the image side");
  adjoint->add_option("--trials", ad.trials, "Random pairs")->capture_default_str();
  adjoint->add_option("--seed", ad.seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Context ctx{out};
  try {
    if (*phantom) return run_phantom(ctx, ph);
    if (*project) return run_project(ctx, pr);
    if (*noise) return run_noise(ctx, no);
    if (*mlem) return run_mlem(ctx, ml);
    if (*train_cmd) return run_train(ctx, tr, false);
    if (*finetune_cmd) return run_train(ctx, ft, true);
    if (*reconstruct_cmd) return run_reconstruct(ctx, rc);
    if (*eval) return run_eval(ctx, ev);
    if (*augment_cmd) return run_augment_preview(ctx, au);
    if (*adjoint) return run_adjoint_test(ctx, ad);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const GeometryError& e) {
    err << "geometry error: " << e.what() << '\n';
    return kExitData;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitData;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << (ctx.running ? "data error: " : "usage error: ") << e.what() << '\n';
    return ctx.running ? kExitData : kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace ssrecon
