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

#ifndef ATENT_DATA_HPP_
#define ATENT_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "atent/models.hpp"
#include "atent/tensor.hpp"

namespace atent {

struct Dataset {
  Tensor inputs;  // [n x ...sample extents], values in [value_min, value_max]
  Tensor labels;  // one-hot [n x classes]
  std::vector<std::string> class_names;
  double value_min = 0.0;
  double value_max = 1.0;

  std::size_t size() const { return inputs.empty() ? 0 : inputs.dim(0); }
  std::size_t classes() const { return labels.empty() ? 0 : labels.dim(1); }
  Shape sample_shape() const;
  Batch as_batch() const { return {inputs, labels}; }
};

// Throws ShapeError/Error if fields disagree or labels are not one-hot.
void validate(const Dataset& ds);

Dataset take(const Dataset& ds, std::span<const std::size_t> indices);

// Parses big-endian IDX image (magic 0x00000803) and label (0x00000801)
// files, plain or gzip-compressed. Pixels are scaled to [0, 1] by /255 and
// labels become 10-class one-hot rows named "0".."9". Throws FormatError on
// bad magic, truncation, or an image/label count mismatch.
Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path);

// Writes `ds` as uncompressed IDX files (pixels rounded from [0, 1] to
// bytes). `ds` must have [n x 28 x 28]-compatible rows or any [n x h x w]
// layout; sample_shape picks the dims.
void write_mnist_idx(const Dataset& ds, const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path);

// Keeps classes a and b (by index), relabels them 0 and 1, caps each at
// cap_per_class (0 = no cap) keeping the earliest, then shuffles with seed.
Dataset subset_binary(const Dataset& ds, std::size_t class_a,
                      std::size_t class_b, std::size_t cap_per_class,
                      std::uint64_t seed);

// n/2 points per class from unit-variance 2D Gaussians centred at
// (+-separation/2, 0), mapped into [0,1]^2 by one shared affine min-max map.
Dataset synth_two_gaussians(std::size_t n, double separation,
                            std::uint64_t seed);

// Seeded split; the first part gets round(n * (1 - val_fraction)) samples.
std::pair<Dataset, Dataset> train_val_split(const Dataset& ds,
                                            double val_fraction,
                                            std::uint64_t seed);

// Shuffled batches for one epoch, order fixed by (seed, epoch). The last
// batch keeps the remainder.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed,
                                                    std::uint64_t epoch);

std::vector<Batch> batch_iter(const Dataset& ds, std::size_t batch_size,
                              std::uint64_t seed, std::uint64_t epoch);

// Directory from $ATENT_DATA_DIR, or `fallback` when unset.
std::filesystem::path data_dir_from_env(const std::filesystem::path& fallback);

}  // namespace atent

#endif  // ATENT_DATA_HPP_
