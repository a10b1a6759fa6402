#include "msinet/tape.hpp"

namespace msinet::ad {

template <class T>
Var<T> GradTape<T>::leaf(BasicTensor<T> value) {
  nodes_.push_back(Node{"leaf", std::move(value), nullptr, true});
  leaves_.push_back(nodes_.size() - 1);
  return Var<T>(this, nodes_.size() - 1);
}

template <class T>
Var<T> GradTape<T>::constant(BasicTensor<T> value) {
  nodes_.push_back(Node{"constant", std::move(value), nullptr, false});
  return Var<T>(this, nodes_.size() - 1);
}

template <class T>
Var<T> GradTape<T>::record(std::string_view op, BasicTensor<T> value, std::initializer_list<Var<T>> inputs,
                           Backward backward) {
  bool needs = false;
  for (const auto& in : inputs) {
    if (&in.tape() != this) throw std::invalid_argument("GradTape: input recorded on a different tape");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(Node{op, std::move(value), needs ? std::move(backward) : nullptr, needs});
  return Var<T>(this, nodes_.size() - 1);
}

template <class T>
void GradTape<T>::accumulate(std::size_t id, const BasicTensor<T>& g) {
  if (!nodes_.at(id).requires_grad) return;
  require_same_shape(g.shape(), nodes_[id].value.shape(), "cotangent");
  auto& slot = grads_.at(id);
  if (slot.empty()) {
    slot = g;
    return;
  }
  for (std::size_t i = 0; i < slot.numel(); ++i) slot[i] += g[i];
}

template <class T>
void GradTape<T>::accumulate(std::size_t id, BasicTensor<T>&& g) {
  if (!nodes_.at(id).requires_grad) return;
  require_same_shape(g.shape(), nodes_[id].value.shape(), "cotangent");
  auto& slot = grads_.at(id);
  if (slot.empty()) {
    slot = std::move(g);
    return;
  }
  for (std::size_t i = 0; i < slot.numel(); ++i) slot[i] += g[i];
}

template <class T>
std::vector<BasicTensor<T>> GradTape<T>::backward(Var<T> loss) {
  if (&loss.tape() != this) throw std::invalid_argument("backward: loss recorded on a different tape");
  if (loss.value().numel() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " + loss.shape().str());
  }
  grads_.assign(nodes_.size(), BasicTensor<T>());
  if (nodes_[loss.id()].requires_grad) grads_[loss.id()] = BasicTensor<T>(loss.shape(), T(1));
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward || grads_[id].empty()) continue;
    node.backward(*this, grads_[id]);
  }
  std::vector<BasicTensor<T>> out;
  out.reserve(leaves_.size());
  for (std::size_t id : leaves_) {
    out.push_back(grads_[id].empty() ? BasicTensor<T>(nodes_[id].value.shape()) : grads_[id]);
  }
  return out;
}

template <class T>
BasicTensor<T> GradTape<T>::grad(Var<T> v) const {
  if (v.id() < grads_.size() && !grads_[v.id()].empty()) return grads_[v.id()];
  return BasicTensor<T>(nodes_.at(v.id()).value.shape());
}

template <class T>
std::vector<std::string_view> GradTape<T>::op_trace() const {
  std::vector<std::string_view> out;
  for (const auto& n : nodes_) {
    if (n.op != "leaf" && n.op != "constant") out.push_back(n.op);
  }
  return out;
}

template class GradTape<float>;
template class GradTape<double>;

}  // namespace msinet::ad
