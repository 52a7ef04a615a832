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

#ifndef ATENT_TENSOR_HPP_
#define ATENT_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace atent {

// Error hierarchy shared by every module. Callers that only care about
// "something went wrong" catch Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. Extents are all positive and
// product(shape) == data.size() always holds.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Value of a single-element tensor.
  double item() const;

  // Same data, new extents of equal product.
  Tensor reshaped(Shape shape) const;

  // Number of elements in one slice along axis 0.
  std::size_t row_size() const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

bool all_finite(std::span<const double> values);

// Throws NonFiniteError naming `what` if any entry is NaN or Inf.
void require_finite(const Tensor& t, std::string_view what);

// Rows `indices` of t along axis 0, in the given order.
Tensor take_rows(const Tensor& t, std::span<const std::size_t> indices);

// Rows [begin, begin + count) of t along axis 0.
Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t count);

// Concatenation along axis 0; trailing extents must agree.
Tensor concat_rows(std::span<const Tensor> parts);

double max_abs_diff(const Tensor& a, const Tensor& b);
double l2_norm(std::span<const double> values);
double linf_norm(std::span<const double> values);

}  // namespace atent

#endif  // ATENT_TENSOR_HPP_
