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

#include "ssrecon/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "binary_io.hpp"
#include "file_util.hpp"
#include "ssrecon/errors.hpp"
#include "ssrecon/system_model.hpp"

namespace ssrecon {

namespace detail {

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Phantoms

namespace {

// Normalised coordinates: the FOV circle is the unit disk.
struct Ellipse {
  double cx, cy, ax, ay, value;
  bool contains(double x, double y) const {
    const double dx = (x - cx) / ax;
    const double dy = (y - cy) / ay;
    return dx * dx + dy * dy <= 1.0;
  }
};

struct Rect {
  double x0, x1, y0, y1, value;
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

// Later shapes overwrite earlier ones.
double paint(PhantomKind kind, double x, double y) {
  double v = 0.0;
  auto over = [&](const auto& shape) {
    if (shape.contains(x, y)) v = shape.value;
  };
  switch (kind) {
    case PhantomKind::disks:
      over(Ellipse{0.0, 0.0, 0.85, 0.85, 1.0});
      over(Ellipse{0.35, -0.30, 0.18, 0.18, 4.0});
      over(Ellipse{-0.40, 0.10, 0.15, 0.15, 0.0});
      over(Ellipse{0.10, 0.45, 0.12, 0.12, 2.5});
      over(Ellipse{-0.15, -0.50, 0.07, 0.07, 5.0});
      over(Ellipse{0.45, 0.20, 0.09, 0.09, 0.3});
      break;
    case PhantomKind::bars:
      over(Ellipse{0.0, 0.0, 0.85, 0.85, 0.5});
      for (int k = 0; k < 6; ++k) {
        const double width = 0.12 - 0.015 * k;
        const double left = -0.62 + 0.22 * k;
        over(Rect{left, left + width, -0.5, 0.5, 2.0});
      }
      break;
    case PhantomKind::brainlike:
      over(Ellipse{0.0, 0.0, 0.80, 0.90, 1.5});
      over(Ellipse{0.0, 0.0, 0.70, 0.80, 0.6});
      over(Ellipse{-0.33, 0.05, 0.25, 0.45, 1.0});
      over(Ellipse{0.33, 0.05, 0.25, 0.45, 1.0});
      over(Ellipse{-0.10, -0.05, 0.06, 0.18, 0.1});
      over(Ellipse{0.10, -0.05, 0.06, 0.18, 0.1});
      over(Ellipse{0.30, -0.45, 0.06, 0.06, 3.0});
      over(Ellipse{-0.35, 0.45, 0.07, 0.07, 0.2});
      break;
  }
  return v;
}

}  // namespace

PhantomKind parse_phantom_kind(std::string_view name) {
  if (name == "disks") return PhantomKind::disks;
  if (name == "bars") return PhantomKind::bars;
  if (name == "brainlike") return PhantomKind::brainlike;
  throw std::invalid_argument("unknown phantom kind '" + std::string(name) + "'");
}

std::string_view to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::disks: return "disks";
    case PhantomKind::bars: return "bars";
    case PhantomKind::brainlike: return "brainlike";
  }
  return "?";
}

Image2D make_phantom(PhantomKind kind, std::size_t n, double total_activity) {
  if (n < kMinPhantomSize) {
    throw std::invalid_argument("phantom size must be at least " + std::to_string(kMinPhantomSize));
  }
  if (!(total_activity >= 0.0) || !std::isfinite(total_activity)) {
    throw std::invalid_argument("total activity must be finite and nonnegative");
  }
  const Geometry geom = Geometry::square(n);
  const double centre = (static_cast<double>(n) - 1.0) / 2.0;
  const double radius = centre;
  constexpr int kSub = 3;
  Image2D img(n);
  img.label = std::string(to_string(kind));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!geom.in_fov(i, j)) continue;
      double acc = 0.0;
      for (int si = 0; si < kSub; ++si) {
        for (int sj = 0; sj < kSub; ++sj) {
          const double y = (static_cast<double>(i) + (si - 1) / 3.0 - centre) / radius;
          const double x = (static_cast<double>(j) + (sj - 1) / 3.0 - centre) / radius;
          acc += paint(kind, x, y);
        }
      }
      img.at(i, j) = acc / (kSub * kSub);
    }
  }
  const double s = img.sum();
  if (s > 0.0) {
    const double f = total_activity / s;
    for (double& v : img.data) v *= f;
  }
  return img;
}

Sinogram2D poisson_sample(const Sinogram2D& mean, Rng& rng) {
  Sinogram2D out(mean.views, mean.bins);
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double mu = mean.data[k];
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
      throw std::invalid_argument("poisson_sample: bin " + std::to_string(k) +
                                  " has invalid mean " + std::to_string(mu));
    }
    out.data[k] = static_cast<double>(rng.poisson(mu));
  }
  out.counts = true;
  return out;
}

// ---------------------------------------------------------------------------
// T32

void write_t32(const std::filesystem::path& path, const Array2D& array) {
  if (array.data.size() != array.rows * array.cols) {
    throw std::invalid_argument("write_t32: array payload does not match its extents");
  }
  if (array.rows > 0xffffffffULL || array.cols > 0xffffffffULL) {
    throw std::invalid_argument("write_t32: extents exceed 32 bits");
  }
  detail::ByteWriter out;
  out.bytes(kT32Magic);
  out.u32(static_cast<std::uint32_t>(array.rows));
  out.u32(static_cast<std::uint32_t>(array.cols));
  for (double v : array.data) out.f64(v);
  detail::write_file(path, out.data());
}

Array2D read_t32(const std::filesystem::path& path) {
  const std::vector<char> buf = detail::read_file(path);
  detail::ByteReader in(buf);
  if (in.remaining() < kT32Magic.size() || in.bytes(kT32Magic.size()) != kT32Magic) {
    throw FormatError(path.string() + ": bad T32 magic", 0);
  }
  const std::uint64_t rows = in.u32();
  const std::uint64_t cols = in.u32();
  const std::uint64_t numel = rows * cols;  // cannot overflow: both < 2^32
  if (numel > in.remaining() / 8) {
    throw FormatError(path.string() + ": extents " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " exceed the file payload",
                      in.offset());
  }
  Array2D a(rows, cols);
  for (double& v : a.data) v = in.f64();
  if (in.remaining() != 0) throw FormatError(path.string() + ": trailing bytes", in.offset());
  return a;
}

Image2D read_image(const std::filesystem::path& path) {
  Image2D img = Image2D::from_array(read_t32(path));
  img.label = path.filename().string();
  return img;
}

Sinogram2D read_sinogram(const std::filesystem::path& path) { return Sinogram2D::from_array(read_t32(path)); }

void write_pgm(const std::filesystem::path& path, const Array2D& array) {
  double peak = 0.0;
  for (double v : array.data) peak = std::max(peak, v);
  std::ostringstream header;
  header << "P5\n" << array.cols << ' ' << array.rows << "\n65535\n";
  detail::ByteWriter out;
  out.bytes(header.str());
  for (double v : array.data) {
    const double scaled = peak > 0.0 ? std::clamp(v / peak, 0.0, 1.0) * 65535.0 : 0.0;
    const auto level = static_cast<std::uint16_t>(std::lround(scaled));
    out.u8(static_cast<std::uint8_t>(level >> 8));  // PGM samples are big-endian
    out.u8(static_cast<std::uint8_t>(level & 0xff));
  }
  detail::write_file(path, out.data());
}

// ---------------------------------------------------------------------------
// Metrics CSV

namespace {

using Field = std::optional<double> MetricsRow::*;
struct Column {
  std::string_view name;
  Field field;
};
constexpr Column kColumns[] = {
    {"rmse_train", &MetricsRow::rmse_train}, {"pll_train", &MetricsRow::pll_train},
    {"rmse_test", &MetricsRow::rmse_test},   {"pll_test", &MetricsRow::pll_test},
    {"loss_total", &MetricsRow::loss_total},
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error(context + ": cannot parse number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

std::map<std::string, double> MetricsRow::named() const {
  std::map<std::string, double> out;
  for (const auto& c : kColumns) {
    if (this->*c.field) out.emplace(std::string(c.name), *(this->*c.field));
  }
  return out;
}

MetricsRow MetricsRow::from_named(long long epoch, const std::map<std::string, double>& values) {
  MetricsRow row;
  row.epoch = epoch;
  for (const auto& [name, value] : values) {
    const auto it = std::find_if(std::begin(kColumns), std::end(kColumns),
                                 [&](const Column& c) { return c.name == name; });
    if (it == std::end(kColumns)) throw std::invalid_argument("unknown metric '" + name + "'");
    row.*(it->field) = value;
  }
  return row;
}

std::string format_metrics_row(const MetricsRow& row) {
  std::string line = std::to_string(row.epoch);
  for (const auto& c : kColumns) {
    line.push_back(',');
    if (row.*c.field) line += format_double(*(row.*c.field));
  }
  return line;
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) throw std::runtime_error(path.string() + ": unexpected metrics header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 1 + std::size(kColumns)) {
      throw std::runtime_error(path.string() + ": malformed metrics row '" + line + "'");
    }
    MetricsRow row;
    row.epoch = std::stoll(fields[0]);
    for (std::size_t c = 0; c < std::size(kColumns); ++c) {
      if (!fields[c + 1].empty()) row.*(kColumns[c].field) = parse_double(fields[c + 1], path.string());
    }
    rows.push_back(row);
  }
  return rows;
}

void append_metrics_row(const std::filesystem::path& path, const MetricsRow& row) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  if (!fresh) {
    const auto existing = read_metrics_csv(path);
    if (!existing.empty() && existing.back().epoch >= row.epoch) {
      throw std::invalid_argument("metrics epochs must increase: " + std::to_string(row.epoch) +
                                  " after " + std::to_string(existing.back().epoch));
    }
  }
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for appending");
  if (fresh) out << kMetricsHeader << '\n';
  out << format_metrics_row(row) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

MetricsLog::MetricsLog(const std::filesystem::path& path) : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out_ << kMetricsHeader << '\n';
}

void MetricsLog::append(const MetricsRow& row) {
  if (last_epoch_ && *last_epoch_ >= row.epoch) {
    throw std::invalid_argument("metrics epochs must increase: " + std::to_string(row.epoch) +
                                " after " + std::to_string(*last_epoch_));
  }
  out_ << format_metrics_row(row) << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write failed for " + path_.string());
  last_epoch_ = row.epoch;
}

void append_metrics_row(const std::filesystem::path& path, long long epoch,
                        const std::map<std::string, double>& named_values) {
  append_metrics_row(path, MetricsRow::from_named(epoch, named_values));
}

}  // namespace ssrecon
