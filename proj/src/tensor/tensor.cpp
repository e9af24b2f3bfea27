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

#include "buildseg/tensor/tensor.h"

#include <algorithm>

#include "buildseg/core/error.h"

namespace buildseg::tensor {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (const auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<T>>(shape_numel(shape_), T{0})),
      grad_(std::make_shared<std::vector<T>>()) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<T>>(std::move(values))),
      grad_(std::make_shared<std::vector<T>>()) {
  if (data_->size() != shape_numel(shape_)) {
    throw ShapeError("tensor of shape " + shape_str(shape_) + " given " + std::to_string(data_->size()) +
                     " values");
  }
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, value));
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape_));
  return (*data_)[0];
}

template <typename T>
void Tensor<T>::zero_grad() {
  grad_->assign(numel(), T{0});
}

template <typename T>
Tensor<T> Tensor<T>::alias() const {
  Tensor out;
  out.shape_ = shape_;
  out.data_ = data_;
  out.grad_ = std::make_shared<std::vector<T>>();
  return out;
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return Tensor(shape_, *data_);
}

template <typename T>
Tape<T>* common_tape(const std::vector<Tensor<T>>& inputs) {
  Tape<T>* tape = nullptr;
  for (const auto& t : inputs) {
    if (!t.tape()) continue;
    if (tape && tape != t.tape()) throw Error("tensors from different tapes combined in one op");
    tape = t.tape();
  }
  return tape;
}

template <typename T>
Tensor<T> Tape<T>::watch(const Tensor<T>& leaf) {
  if (!leaf.defined()) throw Error("cannot watch an undefined tensor");
  if (leaf.tape_ && leaf.tape_ != this) throw Error("tensor already tracked by another tape");
  Tensor<T> out = leaf;
  if (leaf.tape_ == this) return out;
  const auto [it, inserted] = leaf_index_.try_emplace(leaf.data_.get(), static_cast<int>(nodes_.size()));
  if (inserted) nodes_.push_back(Node{leaf.numel(), true, leaf.grad_});
  out.tape_ = this;
  out.node_ = it->second;
  return out;
}

template <typename T>
Tensor<T> Tape<T>::record(std::string kind, const std::vector<Tensor<T>>& inputs, Tensor<T> output,
                          BackwardFn backward) {
  std::vector<int> ids;
  ids.reserve(inputs.size());
  bool tracked = false;
  for (const auto& in : inputs) {
    if (in.tape_ == this) {
      ids.push_back(in.node_);
      tracked = true;
    } else if (in.tape_ == nullptr) {
      ids.push_back(-1);
    } else {
      throw Error("op '" + kind + "' mixes tensors from different tapes");
    }
  }
  if (!tracked) return output;
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{output.numel(), false, std::make_shared<std::vector<T>>()});
  output.tape_ = this;
  output.node_ = id;
  records_.push_back(Record{std::move(kind), std::move(ids), id, std::move(backward)});
  return output;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (loss.numel() != 1) throw ShapeError("backward() needs a scalar loss, got shape " + shape_str(loss.shape()));
  if (loss.tape_ != this || loss.node_ < 0 || loss.node_ >= static_cast<int>(nodes_.size())) {
    throw Error("loss is not recorded on this tape");
  }
  for (auto& node : nodes_) node.grad->assign(node.numel, T{0});
  (*nodes_[loss.node_].grad)[0] = T{1};

  std::vector<std::span<T>> in_grads;
  for (auto rec = records_.rbegin(); rec != records_.rend(); ++rec) {
    if (rec->output > loss.node_) continue;
    in_grads.clear();
    for (const int id : rec->inputs) {
      if (id < 0) {
        in_grads.emplace_back();
      } else {
        in_grads.emplace_back(*nodes_[id].grad);
      }
    }
    rec->backward(*nodes_[rec->output].grad, in_grads);
  }
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template Tape<float>* common_tape(const std::vector<Tensor<float>>&);
template Tape<double>* common_tape(const std::vector<Tensor<double>>&);

}  // namespace buildseg::tensor
