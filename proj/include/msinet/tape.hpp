#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "msinet/tensor.hpp"

namespace msinet::ad {

template <class T>
class GradTape;

/// Handle to a value recorded on a GradTape.
template <class T>
class Var {
 public:
  Var() = default;
  Var(GradTape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const BasicTensor<T>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  GradTape<T>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  GradTape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records primitive applications in execution order. Reverse replay yields one
/// cotangent per leaf. One tape per step; not shared between threads.
template <class T>
class GradTape {
 public:
  using Backward = std::function<void(GradTape&, const BasicTensor<T>& grad_out)>;

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  /// Trainable input; receives a cotangent from backward().
  Var<T> leaf(BasicTensor<T> value);
  /// Input that takes no gradient.
  Var<T> constant(BasicTensor<T> value);

  /// Appends an op node. The backward rule is kept only if some input needs a gradient.
  Var<T> record(std::string_view op, BasicTensor<T> value, std::initializer_list<Var<T>> inputs, Backward backward);

  const BasicTensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  /// Adds g into the cotangent buffer of node id (ignored for constants).
  void accumulate(std::size_t id, const BasicTensor<T>& g);
  void accumulate(std::size_t id, BasicTensor<T>&& g);

  /// Reverse sweep from a scalar. Returns d(loss)/d(leaf) for every leaf in creation order.
  std::vector<BasicTensor<T>> backward(Var<T> loss);

  /// Cotangent accumulated at a node by the last backward() (zeros if none reached it).
  BasicTensor<T> grad(Var<T> v) const;

  std::size_t size() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaves_.size(); }

  /// Names of recorded ops in execution order (leaves and constants excluded).
  std::vector<std::string_view> op_trace() const;

 private:
  struct Node {
    std::string_view op;
    BasicTensor<T> value;
    Backward backward;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
  std::vector<std::size_t> leaves_;
  std::vector<BasicTensor<T>> grads_;
};

extern template class GradTape<float>;
extern template class GradTape<double>;

}  // namespace msinet::ad
