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

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssrecon/arrays.hpp"
#include "ssrecon/rng.hpp"

namespace ssrecon {

enum class PhantomKind { disks, bars, brainlike };

PhantomKind parse_phantom_kind(std::string_view name);
std::string_view to_string(PhantomKind kind);

inline constexpr std::size_t kMinPhantomSize = 8;

// Analytic phantom sampled 3×3 per pixel, masked to the FOV circle of an n×n
// geometry and rescaled so the pixel sum equals `total_activity`.
Image2D make_phantom(PhantomKind kind, std::size_t n, double total_activity);

// Independent Poisson draw per bin. Throws std::invalid_argument on negative
// or non-finite means.
Sinogram2D poisson_sample(const Sinogram2D& mean, Rng& rng);

// T32: "TOMOT32\n", u32 rows, u32 cols, rows·cols f64, all little-endian.
inline constexpr std::string_view kT32Magic = "TOMOT32\n";

void write_t32(const std::filesystem::path& path, const Array2D& array);
Array2D read_t32(const std::filesystem::path& path);

Image2D read_image(const std::filesystem::path& path);
Sinogram2D read_sinogram(const std::filesystem::path& path);
inline void write_image(const std::filesystem::path& path, const Image2D& x) { write_t32(path, x.to_array()); }
inline void write_sinogram(const std::filesystem::path& path, const Sinogram2D& s) { write_t32(path, s.to_array()); }

// 16-bit binary PGM, linearly scaled so the maximum maps to 65535.
void write_pgm(const std::filesystem::path& path, const Array2D& array);

// ---------------------------------------------------------------------------
// Metrics log

inline constexpr std::string_view kMetricsHeader =
    "epoch,rmse_train,pll_train,rmse_test,pll_test,loss_total";

struct MetricsRow {
  long long epoch = 0;
  std::optional<double> rmse_train;
  std::optional<double> pll_train;
  std::optional<double> rmse_test;
  std::optional<double> pll_test;
  std::optional<double> loss_total;

  // Keys are the header column names (excluding "epoch").
  std::map<std::string, double> named() const;
  static MetricsRow from_named(long long epoch, const std::map<std::string, double>& values);
};

// Appends one row, writing the header first when the file is new or empty.
// Epochs must increase strictly across appends.
void append_metrics_row(const std::filesystem::path& path, long long epoch,
                        const std::map<std::string, double>& named_values);
void append_metrics_row(const std::filesystem::path& path, const MetricsRow& row);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

// Keeps the CSV open across appends; same header and ordering rules as
// append_metrics_row. The file is truncated on construction.
class MetricsLog {
 public:
  explicit MetricsLog(const std::filesystem::path& path);
  void append(const MetricsRow& row);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::optional<long long> last_epoch_;
};
std::string format_metrics_row(const MetricsRow& row);

// Shortest round-trippable decimal form.
std::string format_double(double value);

}  // namespace ssrecon
