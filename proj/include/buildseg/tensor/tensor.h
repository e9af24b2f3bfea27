// Copyright 2026 The buildseg Authors.
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

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace buildseg::tensor {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
class Tape;

// Dense row-major tensor. Data is treated as immutable once an op has
// produced it; only the gradient buffer is written during backward. Copies
// are shallow: they share data and gradient storage.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<T> values);

  static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }
  static Tensor full(Shape shape, T value);

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const { return data_ ? data_->size() : 0; }

  std::span<const T> data() const { return *data_; }
  // Direct writes for initialisation and optimiser updates; never recorded.
  std::span<T> mutable_data() { return *data_; }
  T operator[](std::size_t i) const { return (*data_)[i]; }
  T item() const;

  bool has_grad() const { return grad_ && !grad_->empty(); }
  std::span<const T> grad() const { return *grad_; }
  std::span<T> mutable_grad() { return *grad_; }
  void zero_grad();

  Tape<T>* tape() const { return tape_; }
  int node() const { return node_; }

  // Shares data, owns a fresh gradient buffer, carries no tape linkage.
  Tensor alias() const;
  // Independent copy of the data.
  Tensor clone() const;

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<U>((*data_)[i]);
    return Tensor<U>(shape_, std::move(out));
  }

 private:
  friend class Tape<T>;

  Shape shape_;
  std::shared_ptr<std::vector<T>> data_;
  std::shared_ptr<std::vector<T>> grad_;
  Tape<T>* tape_ = nullptr;
  int node_ = -1;
};

// Reverse-mode differentiation tape. Records are appended in execution order,
// so inputs always precede the records that consume them. A tape belongs to a
// single thread; tensors recorded on it hold a pointer to it and must not
// outlive it.
template <typename T>
class Tape {
 public:
  // out_grad is d loss / d output; in_grads[i] is the accumulation buffer for
  // input i, or an empty span when that input is not tracked.
  using BackwardFn = std::function<void(std::span<const T> out_grad, std::span<const std::span<T>> in_grads)>;

  struct Record {
    std::string kind;
    std::vector<int> inputs;
    int output;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a leaf. The returned tensor shares data and gradient storage
  // with the argument, so backward() fills the argument's grad buffer.
  // Watching the same storage twice yields the same node.
  Tensor<T> watch(const Tensor<T>& leaf);

  // Links `output` to the tape when any input is tracked here. Untracked
  // computations pass through unchanged.
  Tensor<T> record(std::string kind, const std::vector<Tensor<T>>& inputs, Tensor<T> output, BackwardFn backward);

  // Populates gradients of every node reachable from `loss`. All gradient
  // buffers on the tape are reset first, so repeated passes are identical.
  void backward(const Tensor<T>& loss);

  std::span<const Record> records() const { return records_; }
  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    std::size_t numel;
    bool leaf;
    std::shared_ptr<std::vector<T>> grad;
  };

  std::vector<Node> nodes_;
  std::vector<Record> records_;
  std::unordered_map<const void*, int> leaf_index_;
};

// Returns the common tape of the given tensors, or nullptr if none is tracked.
// Throws if tensors from two different tapes are mixed.
template <typename T>
Tape<T>* common_tape(const std::vector<Tensor<T>>& inputs);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace buildseg::tensor
