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

// Desk-scale classifiers f(w; x): a ReLU MLP and a small CNN
// (conv3x3 -> ReLU -> maxpool2 blocks, then a dense head).

#ifndef ATENT_MODELS_HPP_
#define ATENT_MODELS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "atent/autodiff.hpp"
#include "atent/tensor.hpp"

namespace atent {

enum class ModelKind { kMlp, kCnn };

struct Architecture {
  ModelKind kind = ModelKind::kMlp;
  // Per-sample input extents: {d} for an MLP, {c, h, w} for a CNN.
  Shape input_shape;
  // MLP: hidden widths. CNN: hidden widths of the dense head.
  std::vector<std::size_t> hidden;
  // CNN only: output channels of each conv block.
  std::vector<std::size_t> conv_channels;
  std::size_t classes = 2;

  bool operator==(const Architecture&) const = default;
};

struct NamedTensor {
  std::string name;
  Tensor value;

  bool operator==(const NamedTensor&) const = default;
};

struct ModelParams {
  Architecture arch;
  std::vector<NamedTensor> weights;

  std::size_t parameter_count() const;
  bool operator==(const ModelParams&) const = default;
};

// Weight names and shapes implied by the descriptor, in storage order.
std::vector<std::pair<std::string, Shape>> expected_weights(
    const Architecture& arch);
std::size_t parameter_count(const Architecture& arch);

// Throws ShapeError if params disagree with their descriptor.
void validate(const ModelParams& params);

// widths = {input, hidden..., classes}. He-normal weights for ReLU layers,
// LeCun-normal for the output layer, zero biases.
ModelParams build_mlp(const std::vector<std::size_t>& layer_widths,
                      std::uint64_t seed);

// fc_widths = {hidden..., classes}; input_shape = {c, h, w}.
ModelParams build_small_cnn(const Shape& input_shape,
                            const std::vector<std::size_t>& channels,
                            const std::vector<std::size_t>& fc_widths,
                            std::uint64_t seed);

struct Batch {
  Tensor inputs;  // [n x ...input_shape]
  Tensor labels;  // one-hot [n x m]
};

void validate(const Batch& batch);

// Records f(w; x) on the inputs' tape; `weights` follow params.weights
// order.
Var forward(const Architecture& arch, std::span<const Var> weights,
            Var inputs);

Tensor forward_logits(const ModelParams& params, const Tensor& inputs);

enum class GradTarget { kWeights, kInputs, kBoth };

struct LossAndGrads {
  double loss = 0.0;                 // mean cross-entropy over the batch
  std::vector<double> sample_losses;  // per-row cross-entropy
  std::vector<Tensor> weight_grads;  // d(mean loss)/dw, params order
  Tensor input_grads;  // row i = d(loss of sample i)/d(x_i)
};

LossAndGrads loss_and_grads(const ModelParams& params, const Batch& batch,
                            GradTarget target);

std::vector<double> sample_losses(const ModelParams& params,
                                  const Batch& batch);

// Argmax class per row; ties go to the lowest class index.
std::vector<std::size_t> argmax_rows(const Tensor& scores);
std::vector<std::size_t> predict(const ModelParams& params,
                                 const Tensor& inputs);
std::vector<std::size_t> label_indices(const Tensor& one_hot);

double accuracy(const ModelParams& params, const Tensor& inputs,
                const Tensor& labels);

// Flat view of all weights, params order, used by weight-space samplers.
std::vector<double> flatten_weights(const ModelParams& params);
void assign_weights(ModelParams& params, std::span<const double> flat);

}  // namespace atent

#endif  // ATENT_MODELS_HPP_
