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

// Reverse-mode automatic differentiation over Tensor.
//
// A Tape records primitive operations in execution order, so every operand
// precedes its consumer. Leaves are created with Tape::leaf; a leaf marked
// requires_grad (weights, or inputs when input gradients are wanted)
// receives a gradient after Tape::backward. A tape supports exactly one
// backward pass. A tape must stay on one thread while in use; distinct
// tapes are independent.

#ifndef ATENT_AUTODIFF_HPP_
#define ATENT_AUTODIFF_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "atent/tensor.hpp"

namespace atent {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var leaf(Tensor value, bool requires_grad = false);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;

  // Gradient of the backward root with respect to v. All zeros for nodes
  // the root does not depend on. Only valid after backward().
  const Tensor& grad(Var v) const;

  // Propagates d(root)/d(node) to every node that requires a gradient.
  // Throws ShapeError for a non-scalar root and Error on a second call.
  void backward(Var root);

  bool backward_done() const { return backward_done_; }
  std::size_t size() const { return nodes_.size(); }

  // Interface for primitive implementations.
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;
  Var record(Tensor value, std::vector<std::size_t> operands,
             BackwardFn backward);
  // Gradient accumulator of a node, allocated on first use.
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  void check_owner(Var v) const;

  std::deque<Node> nodes_;  // deque keeps value() references stable
  bool backward_done_ = false;
};

// a[m x k] * b[k x n].
Var matmul(Var a, Var b);

// x[n x k] + bias[k] broadcast over rows, or x[n x c x h x w] + bias[c]
// broadcast over batch and spatial positions.
Var add_bias(Var x, Var bias);

// Elementwise max(0, x). The subgradient at exactly 0 is 0.
Var relu(Var x);

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// Cross-correlation of input[c_in x h x w] (or a batch
// [n x c_in x h x w]) with kernels[c_out x c_in x kh x kw], zero padded.
Var conv2d(Var input, Var kernels, Conv2dOptions options = {});

// Non-overlapping max pooling over window x window blocks of a
// [n x c x h x w] tensor; trailing rows/columns that do not fill a window
// are dropped. Ties route the gradient to the first maximal element.
Var max_pool2d(Var x, std::size_t window);

Var reshape(Var x, Shape shape);
// [n x ...] -> [n x prod(...)].
Var flatten(Var x);

Var add(Var a, Var b);
Var scale(Var x, double factor);
Var sum(Var x);

enum class Reduction { kMean, kSum };

// Cross-entropy of softmax(logits) against one-hot rows of `labels`,
// reduced over the batch. Uses the max-shift form of log-softmax.
// Throws Error if a label row is not one-hot.
Var softmax_cross_entropy(Var logits, const Tensor& labels,
                          Reduction reduction = Reduction::kMean);

// Per-row cross-entropy without recording anything.
std::vector<double> cross_entropy_rows(const Tensor& logits,
                                       const Tensor& labels);

// Throws Error unless every row of `labels` has one entry 1 and the rest 0.
void require_one_hot(const Tensor& labels);

}  // namespace atent

#endif  // ATENT_AUTODIFF_HPP_
