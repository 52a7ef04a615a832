// Copyright 2026 The ATENT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "atent/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>

#include "atent/rng.hpp"

namespace atent {

namespace {

// gzread also passes plain files through unchanged.
std::vector<unsigned char> read_maybe_gz(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  for (;;) {
    const int n = gzread(f, buf, sizeof(buf));
    if (n < 0) {
      gzclose(f);
      throw FormatError("read error in " + path.string());
    }
    if (n == 0) break;
    out.insert(out.end(), buf, buf + n);
  }
  gzclose(f);
  return out;
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t classes) {
  Tensor t({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t[i * classes + labels[i]] = 1.0;
  }
  return t;
}

}  // namespace

Shape Dataset::sample_shape() const {
  const Shape& s = inputs.shape();
  return Shape(s.begin() + 1, s.end());
}

void validate(const Dataset& ds) {
  if (ds.inputs.rank() < 2) throw ShapeError("dataset inputs need rank >= 2");
  if (ds.labels.rank() != 2 || ds.labels.dim(0) != ds.inputs.dim(0)) {
    throw ShapeError("dataset labels " + shape_string(ds.labels.shape()) +
                     " do not match inputs " + shape_string(ds.inputs.shape()));
  }
  require_one_hot(ds.labels);
  if (!ds.class_names.empty() && ds.class_names.size() != ds.classes()) {
    throw ShapeError("class_names size does not match label width");
  }
  if (!(ds.value_min < ds.value_max)) throw Error("empty input value range");
  require_finite(ds.inputs, "dataset inputs");
}

Dataset take(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.inputs = take_rows(ds.inputs, indices);
  out.labels = take_rows(ds.labels, indices);
  out.class_names = ds.class_names;
  out.value_min = ds.value_min;
  out.value_max = ds.value_max;
  return out;
}

Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path) {
  const auto img = read_maybe_gz(images_path);
  const auto lab = read_maybe_gz(labels_path);
  if (img.size() < 16 || be32(img, 0) != 0x00000803) {
    throw FormatError("bad IDX image header in " + images_path.string());
  }
  if (lab.size() < 8 || be32(lab, 0) != 0x00000801) {
    throw FormatError("bad IDX label header in " + labels_path.string());
  }
  const std::size_t n = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  const std::size_t n_labels = be32(lab, 4);
  if (n != n_labels) {
    throw FormatError("IDX image count " + std::to_string(n) +
                      " != label count " + std::to_string(n_labels));
  }
  if (n == 0 || rows == 0 || cols == 0) throw FormatError("empty IDX file");
  if (img.size() != 16 + n * rows * cols) {
    throw FormatError("IDX image payload truncated or oversized");
  }
  if (lab.size() != 8 + n) throw FormatError("IDX label payload truncated");

  std::vector<double> px(n * rows * cols);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = img[16 + i] / 255.0;
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (lab[8 + i] > 9) throw FormatError("IDX label out of range 0..9");
    labels[i] = lab[8 + i];
  }
  Dataset ds;
  ds.inputs = Tensor({n, rows, cols}, std::move(px));
  ds.labels = one_hot(labels, 10);
  for (int c = 0; c < 10; ++c) ds.class_names.push_back(std::to_string(c));
  return ds;
}

void write_mnist_idx(const Dataset& ds, const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path) {
  validate(ds);
  const Shape s = ds.sample_shape();
  if (s.size() != 2) throw ShapeError("IDX writer needs [n x h x w] inputs");
  if (ds.classes() > 256) throw ShapeError("too many classes for IDX");
  const std::size_t n = ds.size();

  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw Error("cannot write IDX files");
  put_be32(img, 0x00000803);
  put_be32(img, static_cast<std::uint32_t>(n));
  put_be32(img, static_cast<std::uint32_t>(s[0]));
  put_be32(img, static_cast<std::uint32_t>(s[1]));
  for (double v : ds.inputs.values()) {
    const double b = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    img.put(static_cast<char>(static_cast<unsigned char>(b)));
  }
  put_be32(lab, 0x00000801);
  put_be32(lab, static_cast<std::uint32_t>(n));
  for (std::size_t y : label_indices(ds.labels)) {
    lab.put(static_cast<char>(static_cast<unsigned char>(y)));
  }
  if (!img || !lab) throw Error("short write on IDX files");
}

Dataset subset_binary(const Dataset& ds, std::size_t class_a,
                      std::size_t class_b, std::size_t cap_per_class,
                      std::uint64_t seed) {
  if (class_a == class_b || class_a >= ds.classes() ||
      class_b >= ds.classes()) {
    throw Error("subset_binary: invalid class pair");
  }
  const auto y = label_indices(ds.labels);
  std::vector<std::size_t> keep;
  std::vector<std::size_t> new_labels;
  std::size_t count_a = 0, count_b = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == class_a && (cap_per_class == 0 || count_a < cap_per_class)) {
      ++count_a;
      keep.push_back(i);
    } else if (y[i] == class_b &&
               (cap_per_class == 0 || count_b < cap_per_class)) {
      ++count_b;
      keep.push_back(i);
    }
  }
  if (count_a == 0 || count_b == 0) throw Error("subset_binary: class missing");
  Rng rng = Rng::stream(seed, {kDataStream});
  rng.shuffle(keep);
  for (std::size_t i : keep) new_labels.push_back(y[i] == class_a ? 0 : 1);

  Dataset out;
  out.inputs = take_rows(ds.inputs, keep);
  out.labels = one_hot(new_labels, 2);
  if (!ds.class_names.empty()) {
    out.class_names = {ds.class_names[class_a], ds.class_names[class_b]};
  }
  out.value_min = ds.value_min;
  out.value_max = ds.value_max;
  return out;
}

Dataset synth_two_gaussians(std::size_t n, double separation,
                            std::uint64_t seed) {
  if (n < 2) throw Error("synth_two_gaussians needs n >= 2");
  Rng rng = Rng::stream(seed, {kDataStream});
  std::vector<double> xs(2 * n);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i < n / 2 ? 0 : 1;
    const double centre = labels[i] == 0 ? -separation / 2 : separation / 2;
    xs[2 * i] = centre + rng.normal();
    xs[2 * i + 1] = rng.normal();
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : xs) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double& v : xs) v = (v - lo) / (hi - lo);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  Dataset raw;
  raw.inputs = Tensor({n, 2}, std::move(xs));
  raw.labels = one_hot(labels, 2);
  raw.class_names = {"a", "b"};
  return take(raw, order);
}

std::pair<Dataset, Dataset> train_val_split(const Dataset& ds,
                                            double val_fraction,
                                            std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw Error("val_fraction must be in [0, 1)");
  }
  const std::size_t n = ds.size();
  const auto n_train = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * (1.0 - val_fraction)));
  if (n_train == 0) throw Error("train split would be empty");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::stream(seed, {kSplitStream});
  rng.shuffle(order);
  const std::span<const std::size_t> all(order);
  Dataset train = take(ds, all.first(n_train));
  Dataset val;
  if (n_train < n) {
    val = take(ds, all.subspan(n_train));
  } else {
    val.class_names = ds.class_names;
    val.value_min = ds.value_min;
    val.value_max = ds.value_max;
  }
  return {std::move(train), std::move(val)};
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed,
                                                    std::uint64_t epoch) {
  if (batch_size == 0) throw Error("batch_size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::stream(seed, {kShuffleStream, epoch});
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + start, order.begin() + end);
  }
  return out;
}

std::vector<Batch> batch_iter(const Dataset& ds, std::size_t batch_size,
                              std::uint64_t seed, std::uint64_t epoch) {
  std::vector<Batch> out;
  for (const auto& idx : batch_indices(ds.size(), batch_size, seed, epoch)) {
    out.push_back({take_rows(ds.inputs, idx), take_rows(ds.labels, idx)});
  }
  return out;
}

std::filesystem::path data_dir_from_env(const std::filesystem::path& fallback) {
  const char* env = std::getenv("ATENT_DATA_DIR");
  if (env != nullptr && *env != '\0') return env;
  return fallback;
}

}  // namespace atent
