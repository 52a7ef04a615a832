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

#include "atent/models.hpp"

#include <algorithm>
#include <cmath>

#include "atent/rng.hpp"

namespace atent {

namespace {

constexpr std::size_t kEvalChunk = 512;

std::size_t input_size(const Architecture& arch) {
  return shape_size(arch.input_shape);
}

// Flattened feature count entering the CNN dense head.
std::size_t cnn_feature_size(const Architecture& arch) {
  std::size_t c = arch.input_shape[0];
  std::size_t h = arch.input_shape[1];
  std::size_t w = arch.input_shape[2];
  for (std::size_t out : arch.conv_channels) {
    c = out;
    h /= 2;
    w /= 2;
  }
  return c * h * w;
}

void check_arch(const Architecture& arch) {
  if (arch.classes == 0) throw ShapeError("model needs at least one class");
  for (std::size_t w : arch.hidden) {
    if (w == 0) throw ShapeError("zero layer width");
  }
  if (arch.kind == ModelKind::kMlp) {
    if (arch.input_shape.empty() || input_size(arch) == 0) {
      throw ShapeError("MLP input width must be positive");
    }
    return;
  }
  if (arch.input_shape.size() != 3) {
    throw ShapeError("CNN input shape must be {c, h, w}");
  }
  if (arch.conv_channels.empty()) throw ShapeError("CNN needs a conv block");
  std::size_t h = arch.input_shape[1], w = arch.input_shape[2];
  for (std::size_t ch : arch.conv_channels) {
    if (ch == 0) throw ShapeError("zero conv channel count");
    if (h < 2 || w < 2) throw ShapeError("CNN input too small to pool");
    h /= 2;
    w /= 2;
  }
}

}  // namespace

std::vector<std::pair<std::string, Shape>> expected_weights(
    const Architecture& arch) {
  check_arch(arch);
  std::vector<std::pair<std::string, Shape>> out;
  std::size_t fan_in = 0;
  if (arch.kind == ModelKind::kCnn) {
    std::size_t c = arch.input_shape[0];
    for (std::size_t i = 0; i < arch.conv_channels.size(); ++i) {
      const std::string p = "conv" + std::to_string(i);
      out.emplace_back(p + ".weight", Shape{arch.conv_channels[i], c, 3, 3});
      out.emplace_back(p + ".bias", Shape{arch.conv_channels[i]});
      c = arch.conv_channels[i];
    }
    fan_in = cnn_feature_size(arch);
  } else {
    fan_in = input_size(arch);
  }
  std::vector<std::size_t> widths = arch.hidden;
  widths.push_back(arch.classes);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string p = "fc" + std::to_string(i);
    out.emplace_back(p + ".weight", Shape{fan_in, widths[i]});
    out.emplace_back(p + ".bias", Shape{widths[i]});
    fan_in = widths[i];
  }
  return out;
}

std::size_t parameter_count(const Architecture& arch) {
  std::size_t n = 0;
  for (const auto& [name, shape] : expected_weights(arch)) n += shape_size(shape);
  return n;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const NamedTensor& w : weights) n += w.value.size();
  return n;
}

void validate(const ModelParams& params) {
  const auto expected = expected_weights(params.arch);
  if (expected.size() != params.weights.size()) {
    throw ShapeError("model has " + std::to_string(params.weights.size()) +
                     " weight tensors, descriptor needs " +
                     std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const NamedTensor& w = params.weights[i];
    if (w.name != expected[i].first || w.value.shape() != expected[i].second) {
      throw ShapeError("weight '" + w.name + "' " +
                       shape_string(w.value.shape()) + " does not match '" +
                       expected[i].first + "' " +
                       shape_string(expected[i].second));
    }
  }
}

namespace {

ModelParams initialize(const Architecture& arch, std::uint64_t seed) {
  ModelParams params;
  params.arch = arch;
  Rng rng = Rng::stream(seed, {kInitStream});
  const auto layout = expected_weights(arch);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& [name, shape] = layout[i];
    Tensor t(shape);
    if (shape.size() > 1) {
      const std::size_t fan_in = shape.size() == 4
                                     ? shape[1] * shape[2] * shape[3]
                                     : shape[0];
      const bool output_layer = i + 2 == layout.size();
      const double gain = output_layer ? 1.0 : 2.0;
      rng.fill_normal(t.data(),
                      std::sqrt(gain / static_cast<double>(fan_in)));
    }
    params.weights.push_back({name, std::move(t)});
  }
  return params;
}

}  // namespace

ModelParams build_mlp(const std::vector<std::size_t>& layer_widths,
                      std::uint64_t seed) {
  if (layer_widths.size() < 2) {
    throw ShapeError("an MLP needs at least input and output widths");
  }
  if (std::find(layer_widths.begin(), layer_widths.end(), 0u) !=
      layer_widths.end()) {
    throw ShapeError("zero layer width");
  }
  Architecture arch;
  arch.kind = ModelKind::kMlp;
  arch.input_shape = {layer_widths.front()};
  arch.hidden.assign(layer_widths.begin() + 1, layer_widths.end() - 1);
  arch.classes = layer_widths.back();
  return initialize(arch, seed);
}

ModelParams build_small_cnn(const Shape& input_shape,
                            const std::vector<std::size_t>& channels,
                            const std::vector<std::size_t>& fc_widths,
                            std::uint64_t seed) {
  if (fc_widths.empty()) throw ShapeError("CNN head needs a class count");
  Architecture arch;
  arch.kind = ModelKind::kCnn;
  arch.input_shape = input_shape;
  arch.conv_channels = channels;
  arch.hidden.assign(fc_widths.begin(), fc_widths.end() - 1);
  arch.classes = fc_widths.back();
  return initialize(arch, seed);
}

void validate(const Batch& batch) {
  if (batch.inputs.rank() < 2 || batch.labels.rank() != 2 ||
      batch.inputs.dim(0) != batch.labels.dim(0)) {
    throw ShapeError("batch inputs " + shape_string(batch.inputs.shape()) +
                     " and labels " + shape_string(batch.labels.shape()) +
                     " disagree");
  }
  require_one_hot(batch.labels);
}

Var forward(const Architecture& arch, std::span<const Var> weights,
            Var inputs) {
  const std::size_t n = inputs.value().dim(0);
  if (inputs.value().row_size() != input_size(arch)) {
    throw ShapeError("input " + shape_string(inputs.shape()) +
                     " does not match model input " +
                     shape_string(arch.input_shape));
  }
  std::size_t w = 0;
  Var h = inputs;
  if (arch.kind == ModelKind::kCnn) {
    Shape s{n};
    s.insert(s.end(), arch.input_shape.begin(), arch.input_shape.end());
    h = reshape(h, s);
    for (std::size_t i = 0; i < arch.conv_channels.size(); ++i) {
      h = conv2d(h, weights[w], {.stride = 1, .padding = 1});
      h = add_bias(h, weights[w + 1]);
      h = relu(h);
      h = max_pool2d(h, 2);
      w += 2;
    }
  }
  h = flatten(h);
  const std::size_t dense = arch.hidden.size() + 1;
  for (std::size_t i = 0; i < dense; ++i) {
    h = matmul(h, weights[w]);
    h = add_bias(h, weights[w + 1]);
    if (i + 1 < dense) h = relu(h);
    w += 2;
  }
  return h;
}

Tensor forward_logits(const ModelParams& params, const Tensor& inputs) {
  if (inputs.rank() < 2) throw ShapeError("inputs need a batch axis");
  std::vector<Tensor> parts;
  for (std::size_t begin = 0; begin < inputs.dim(0); begin += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, inputs.dim(0) - begin);
    Tape tape;
    std::vector<Var> w;
    for (const NamedTensor& t : params.weights) w.push_back(tape.leaf(t.value));
    Var x = tape.leaf(count == inputs.dim(0) ? inputs
                                             : slice_rows(inputs, begin, count));
    parts.push_back(forward(params.arch, w, x).value());
  }
  return parts.size() == 1 ? std::move(parts[0]) : concat_rows(parts);
}

LossAndGrads loss_and_grads(const ModelParams& params, const Batch& batch,
                            GradTarget target) {
  validate(batch);
  const bool want_w = target != GradTarget::kInputs;
  const bool want_x = target != GradTarget::kWeights;
  Tape tape;
  std::vector<Var> w;
  w.reserve(params.weights.size());
  for (const NamedTensor& t : params.weights) {
    w.push_back(tape.leaf(t.value, want_w));
  }
  Var x = tape.leaf(batch.inputs, want_x);
  Var logits = forward(params.arch, w, x);
  // Differentiate the summed loss: its input gradient row i is exactly the
  // gradient of sample i's own loss. Weight gradients are rescaled to the
  // batch mean.
  Var root = softmax_cross_entropy(logits, batch.labels, Reduction::kSum);
  tape.backward(root);

  LossAndGrads out;
  const double n = static_cast<double>(batch.inputs.dim(0));
  out.loss = root.value()[0] / n;
  out.sample_losses = cross_entropy_rows(logits.value(), batch.labels);
  if (want_w) {
    const double inv = 1.0 / n;
    for (Var v : w) {
      Tensor g = tape.grad(v);
      for (double& e : g.data()) e *= inv;
      out.weight_grads.push_back(std::move(g));
    }
  }
  if (want_x) out.input_grads = tape.grad(x);
  return out;
}

std::vector<double> sample_losses(const ModelParams& params,
                                  const Batch& batch) {
  validate(batch);
  return cross_entropy_rows(forward_logits(params, batch.inputs), batch.labels);
}

std::vector<std::size_t> argmax_rows(const Tensor& scores) {
  if (scores.rank() != 2) throw ShapeError("argmax_rows expects [n x m]");
  const std::size_t n = scores.dim(0), m = scores.dim(1);
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m; ++j) {
      if (scores[i * m + j] > scores[i * m + best]) best = j;
    }
    out[i] = best;
  }
  return out;
}

std::vector<std::size_t> predict(const ModelParams& params,
                                 const Tensor& inputs) {
  return argmax_rows(forward_logits(params, inputs));
}

std::vector<std::size_t> label_indices(const Tensor& one_hot) {
  require_one_hot(one_hot);
  return argmax_rows(one_hot);
}

double accuracy(const ModelParams& params, const Tensor& inputs,
                const Tensor& labels) {
  const auto pred = predict(params, inputs);
  const auto truth = label_indices(labels);
  if (pred.size() != truth.size()) throw ShapeError("accuracy size mismatch");
  if (pred.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

std::vector<double> flatten_weights(const ModelParams& params) {
  std::vector<double> flat;
  flat.reserve(params.parameter_count());
  for (const NamedTensor& w : params.weights) {
    flat.insert(flat.end(), w.value.data().begin(), w.value.data().end());
  }
  return flat;
}

void assign_weights(ModelParams& params, std::span<const double> flat) {
  if (flat.size() != params.parameter_count()) {
    throw ShapeError("flat weight vector has wrong length");
  }
  std::size_t offset = 0;
  for (NamedTensor& w : params.weights) {
    std::copy_n(flat.begin() + offset, w.value.size(), w.value.data().begin());
    offset += w.value.size();
  }
}

}  // namespace atent
