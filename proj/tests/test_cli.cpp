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

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "ssrecon/cli.hpp"
#include "ssrecon/data_io.hpp"
#include "ssrecon/metrics.hpp"
#include "ssrecon/networks.hpp"
#include "ssrecon/params.hpp"

using namespace ssrecon;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Runs the installed binary inside `dir` with captured streams.
Run run(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" SSRECON_BIN "' " + args + " > stdout.txt 2> stderr.txt";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(dir / "stdout.txt");
  r.err = slurp(dir / "stderr.txt");
  return r;
}

// Value of a key=value line, or "" when absent.
std::string value_of(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  }
  return "";
}

std::string last_line(const std::string& text) {
  std::string t = text;
  while (!t.empty() && t.back() == '\n') t.pop_back();
  return t.substr(t.find_last_of('\n') + 1);
}

struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("ssrecon_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("phantom") {
  Workspace w("phantom");
  const Run a = run(w.dir, "phantom --kind disks --size 96 --activity 1e6 --out p.t32");
  REQUIRE(a.code == 0);
  CHECK(a.out.find("kind=disks\n") != std::string::npos);
  CHECK(read_image(w.dir / "p.t32").sum() == doctest::Approx(1e6).epsilon(1e-12));
  const std::string first = slurp(w.dir / "p.t32");
  REQUIRE(run(w.dir, "phantom --kind disks --size 96 --activity 1e6 --out p.t32").code == 0);
  CHECK(slurp(w.dir / "p.t32") == first);
  CHECK(run(w.dir, "phantom --kind disks --size 7 --out q.t32").code == kExitUsage);
  CHECK(run(w.dir, "phantom --kind blob --size 16 --out q.t32").code == kExitUsage);
  CHECK(run(w.dir, "phantom --kind disks --size 16 --out q.t32 --frobnicate").code == kExitUsage);
  CHECK(run(w.dir, "").code == kExitUsage);
  CHECK(run(w.dir, "nonsense").code == kExitUsage);
  CHECK_FALSE(fs::exists(w.dir / "q.t32"));
  CHECK(run(w.dir, "--help").code == 0);
}

TEST_CASE("project, noise, mlem and eval") {
  Workspace w("pipeline");
  REQUIRE(run(w.dir, "phantom --kind disks --size 32 --activity 3125 --out p.t32").code == 0);
  REQUIRE(run(w.dir, "project --image p.t32 --out s.t32").code == 0);
  const Sinogram2D s = read_sinogram(w.dir / "s.t32");
  CHECK(s.views == 32);
  CHECK(s.bins == 32);
  CHECK(s.sum() == doctest::Approx(1e5).epsilon(1e-12));
  REQUIRE(run(w.dir, "project --image p.t32 --out s2.t32 --views 12 --bins 40").code == 0);
  CHECK(read_sinogram(w.dir / "s2.t32").views == 12);

  REQUIRE(run(w.dir, "noise --sino s.t32 --seed 7 --out n1.t32").code == 0);
  REQUIRE(run(w.dir, "noise --sino s.t32 --seed 7 --out n2.t32").code == 0);
  CHECK(slurp(w.dir / "n1.t32") == slurp(w.dir / "n2.t32"));
  REQUIRE(run(w.dir, "noise --sino s.t32 --seed 8 --out n3.t32").code == 0);
  CHECK(slurp(w.dir / "n1.t32") != slurp(w.dir / "n3.t32"));

  const Run m = run(w.dir, "mlem --sino s.t32 --iters 500 --out ml.t32 --metrics ml.csv --truth p.t32");
  REQUIRE(m.code == 0);
  const auto rows = read_metrics_csv(w.dir / "ml.csv");
  REQUIRE(rows.size() == 500);
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(*rows[k].pll_train >= *rows[k - 1].pll_train);

  const Run e = run(w.dir, "eval --image ml.t32 --reference p.t32 --sino s.t32");
  REQUIRE(e.code == 0);
  const std::string row = last_line(e.out);
  const double rmse_cli = std::stod(row.substr(0, row.find(',')));
  const double pll_cli = std::stod(row.substr(row.find(',') + 1));
  CHECK(rmse_cli < 5.0);
  // Same code path as the per-iteration log and the library metric.
  CHECK(rmse_cli == doctest::Approx(*rows.back().rmse_train).epsilon(1e-12));
  CHECK(rmse_cli == doctest::Approx(rmse(read_image(w.dir / "ml.t32"), read_image(w.dir / "p.t32"))).epsilon(1e-12));
  CHECK(pll_cli == doctest::Approx(*rows.back().pll_train).epsilon(1e-12));
  CHECK(e.out.find("rmse_percent,pll\n") != std::string::npos);

  const Run same = run(w.dir, "eval --image p.t32 --reference p.t32");
  REQUIRE(same.code == 0);
  CHECK(last_line(same.out) == "0,");

  CHECK(run(w.dir, "mlem --sino s.t32 --iters 0 --out x.t32").code == kExitUsage);
  CHECK(run(w.dir, "eval --image ml.t32 --reference missing.t32").code == kExitData);
  REQUIRE(run(w.dir, "phantom --kind bars --size 16 --activity 10 --out small.t32").code == 0);
  CHECK(run(w.dir, "eval --image small.t32 --reference p.t32").code == kExitData);
  CHECK(run(w.dir, "eval --image small.t32 --reference small.t32 --sino s.t32").code == kExitData);
  std::ofstream(w.dir / "junk.t32") << "not a tensor";
  CHECK(run(w.dir, "mlem --sino junk.t32 --out x.t32").code == kExitData);
}

TEST_CASE("adjoint-test") {
  Workspace w("adjoint");
  const Run r = run(w.dir, "adjoint-test --size 96 --trials 20 --seed 1");
  CHECK(r.code == 0);
  CHECK(value_of(r.out, "result") == "pass");
  CHECK(std::stod(value_of(r.out, "max_relative_error")) < 1e-10);
  CHECK(run(w.dir, "adjoint-test --size 12 --views 5 --bins 17").code == 0);
  CHECK(run(w.dir, "adjoint-test --size 12 --trials 0").code == kExitUsage);
  CHECK(run(w.dir, "adjoint-test --size 0").code == kExitData);
}

TEST_CASE("train, reconstruct and finetune") {
  Workspace w("train");
  REQUIRE(run(w.dir, "phantom --kind brainlike --size 16 --activity 500 --out a.t32").code == 0);
  REQUIRE(run(w.dir, "phantom --kind disks --size 16 --activity 500 --out b.t32").code == 0);
  REQUIRE(run(w.dir, "project --image a.t32 --out am.t32").code == 0);
  REQUIRE(run(w.dir, "project --image b.t32 --out bm.t32").code == 0);
  REQUIRE(run(w.dir, "noise --sino am.t32 --seed 1 --out an.t32").code == 0);
  const std::string small = " --channels 2 --layers 1 --kernel 3 --lr 1e-3 --seed 4 ";

  SUBCASE("defaults are echoed before any work") {
    const Run r = run(w.dir, "train --method dl_fbp --sino missing.t32 --epochs 1 --out-dir d");
    CHECK(r.code == kExitData);
    CHECK(value_of(r.out, "lr") == "5e-06");
    CHECK(value_of(r.out, "kernel") == "9");
    CHECK(value_of(r.out, "channels") == "192");
    CHECK(value_of(r.out, "layers") == "4");
    CHECK(value_of(r.out, "positivity") == "abs");
    const Run f = run(w.dir, "train --method dl_fbp_f --sino missing.t32 --epochs 1 --out-dir d");
    CHECK(value_of(f.out, "layers") == "2");
    CHECK(value_of(f.out, "layers2") == "2");
    CHECK(value_of(f.out, "positivity") == "prelu_scalar");
  }
  SUBCASE("usage errors") {
    CHECK(run(w.dir, "train --method dl_fbp --sino an.t32 --epochs 0 --out-dir d").code == kExitUsage);
    CHECK(run(w.dir, "train --method dl_fbp --sino an.t32 --out-dir d").code == kExitUsage);
    CHECK(run(w.dir, "train --method dl_fbp --sino an.t32 --epochs 2 --gamma 1 --out-dir d").code == kExitUsage);
    CHECK(run(w.dir, "train --method dl_fbp --sino an.t32 --epochs 2 --beta 1 --out-dir d").code == kExitUsage);
    CHECK(run(w.dir, "train --method fbp --sino an.t32 --epochs 2 --out-dir d").code == kExitUsage);
    CHECK(run(w.dir, "train --method dl_fbp --sino an.t32 --epochs 2 --augment a9 --out-dir d").code == kExitUsage);
    CHECK(run(w.dir, "train --method dl_fbp --sino an.t32 --epochs 2 --kernel 4 --out-dir d").code == kExitUsage);
    CHECK(run(w.dir, "train --method dl_fbp --sino an.t32 --epochs 2 --ref-sino bm.t32 --out-dir d").code ==
          kExitUsage);
    CHECK(run(w.dir, "train --method dl_fbp --sino an.t32 --epochs 2 --lr -1 --out-dir d").code == kExitUsage);
    CHECK_FALSE(fs::exists(w.dir / "d"));
  }
  SUBCASE("outputs, determinism and bit-identical reconstruction") {
    const std::string args = "train --method dl_fbp_f --sino an.t32 --truth a.t32 --test-sino bm.t32 --test-truth b.t32"
                             " --epochs 6 --eval-every 2 --checkpoint-every 3 --augment a2" + small;
    const Run r1 = run(w.dir, args + "--out-dir r1");
    REQUIRE(r1.code == 0);
    const Run r2 = run(w.dir, args + "--out-dir r2");
    REQUIRE(r2.code == 0);
    CHECK(value_of(r1.out, "epochs_run") == "6");
    for (const char* f : {"metrics.csv", "final.t32", "checkpoint.tlck", "checkpoint_3.tlck", "summary.txt"}) {
      CAPTURE(f);
      REQUIRE(fs::exists(w.dir / "r1" / f));
      CHECK(slurp(w.dir / "r1" / f) == slurp(w.dir / "r2" / f));
    }
    CHECK(read_metrics_csv(w.dir / "r1" / "metrics.csv").size() == 3);
    CHECK(r1.out.substr(r1.out.find("epochs_run")) == r2.out.substr(r2.out.find("epochs_run")));

    REQUIRE(run(w.dir, "reconstruct --checkpoint r1/checkpoint.tlck --sino an.t32 --out x.t32").code == 0);
    CHECK(slurp(w.dir / "x.t32") == slurp(w.dir / "r1" / "final.t32"));

    const Run z = run(w.dir, "finetune --checkpoint r1/checkpoint.tlck --sino bm.t32 --epochs 0 --out-dir z");
    REQUIRE(z.code == 0);
    REQUIRE(run(w.dir, "reconstruct --checkpoint r1/checkpoint.tlck --sino bm.t32 --out y.t32").code == 0);
    CHECK(slurp(w.dir / "z" / "final.t32") == slurp(w.dir / "y.t32"));

    const Run f = run(w.dir, "finetune --checkpoint r1/checkpoint.tlck --sino bm.t32 --truth b.t32 --epochs 4 "
                             "--lr 1e-4 --out-dir f");
    REQUIRE(f.code == 0);
    CHECK(value_of(f.out, "command") == "finetune");
    CHECK(value_of(f.out, "epochs_run") == "4");
    CHECK(value_of(f.out, "method").empty());
    CHECK(load_checkpoint(w.dir / "f" / "checkpoint.tlck").step_count == 4);
    CHECK(run(w.dir, "finetune --checkpoint r1/checkpoint.tlck --sino bm.t32 --epochs -1 --out-dir g").code ==
          kExitUsage);
    CHECK(run(w.dir, "finetune --checkpoint nothing.tlck --sino bm.t32 --epochs 1 --out-dir g").code == kExitData);
  }
  SUBCASE("checkpoint and geometry mismatches") {
    REQUIRE(run(w.dir, "train --method ddl --sino an.t32 --epochs 1 --out-dir ddl" + small).code == 0);
    REQUIRE(run(w.dir, "project --image a.t32 --views 8 --out wide.t32").code == 0);
    CHECK(run(w.dir, "reconstruct --checkpoint ddl/checkpoint.tlck --sino wide.t32 --out x.t32").code == kExitData);
    CHECK(run(w.dir, "train --method ddl --sino wide.t32 --epochs 1 --out-dir ddl2" + small).code == kExitData);
    std::ofstream(w.dir / "bad.tlck") << "TLCKgarbage";
    CHECK(run(w.dir, "reconstruct --checkpoint bad.tlck --sino an.t32 --out x.t32").code == kExitData);
  }
  SUBCASE("non-finite parameters abort with the numerical exit code") {
    REQUIRE(run(w.dir, "train --method dl_fbp --sino an.t32 --epochs 1 --out-dir ok" + small).code == 0);
    ParamStore s = load_checkpoint(w.dir / "ok" / "checkpoint.tlck");
    s.at(0).value[0] = std::numeric_limits<double>::quiet_NaN();
    save_checkpoint(w.dir / "nan.tlck", s);
    const Run r = run(w.dir, "finetune --checkpoint nan.tlck --sino an.t32 --epochs 2 --out-dir nan");
    CHECK(r.code == kExitNumerical);
    CHECK(fs::exists(w.dir / "nan" / "diag.tlck"));
  }
}

TEST_CASE("augment-preview") {
  Workspace w("augment");
  REQUIRE(run(w.dir, "phantom --kind disks --size 16 --activity 200 --out p.t32").code == 0);
  REQUIRE(run(w.dir, "project --image p.t32 --out s.t32").code == 0);
  const Run a = run(w.dir, "augment-preview --sino s.t32 --out-dir a --seed 3 --count 5");
  REQUIRE(a.code == 0);
  const Run b = run(w.dir, "augment-preview --sino s.t32 --out-dir b --seed 3 --count 5");
  CHECK(a.out.substr(a.out.find("index,")) == b.out.substr(b.out.find("index,")));
  for (int k = 1; k <= 5; ++k) {
    const std::string f = "augment_" + std::to_string(k) + ".t32";
    CHECK(slurp(w.dir / "a" / f) == slurp(w.dir / "b" / f));
    CHECK(fs::exists(w.dir / "a" / ("augment_" + std::to_string(k) + ".pgm")));
    // The target stays the measured sinogram.
    CHECK(slurp(w.dir / "a" / ("augment_" + std::to_string(k) + "_target.t32")) == slurp(w.dir / "s.t32"));
  }
  CHECK(run(w.dir, "augment-preview --sino s.t32 --out-dir c --count 0").code == kExitUsage);
}
