#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <utility>
#include <vector>

#include "splatforge/core/check.hpp"
#include "splatforge/core/random.hpp"

namespace splatforge {

using Index = std::int64_t;
using Shape = std::vector<Index>;

template <class S>
using Array = Eigen::Array<S, Eigen::Dynamic, 1>;

inline Index numel_of(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <class S>
class Tape;

template <class S>
struct TensorStorage {
  Shape shape;
  Array<S> value;
  Array<S> grad;  // empty until first accumulation / watch
  Tape<S>* tape = nullptr;
};

// Shared handle to a dense row-major tensor. Values are immutable by
// convention once the tensor has entered an op; grads accumulate additively
// during backward. A tensor participates in differentiation iff its storage
// carries a tape pointer, set either by Tape::watch (leaves) or by the op
// that produced it.
template <class S>
class Tensor {
 public:
  using Scalar = S;

  Tensor() = default;

  explicit Tensor(Shape shape) : d_(std::make_shared<TensorStorage<S>>()) {
    d_->shape = std::move(shape);
    d_->value = Array<S>::Zero(numel_of(d_->shape));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, S v) {
    Tensor t(std::move(shape));
    t.value().setConstant(v);
    return t;
  }

  static Tensor ones(Shape shape) { return full(std::move(shape), S(1)); }

  static Tensor scalar(S v) { return full({}, v); }

  static Tensor from(Shape shape, std::initializer_list<S> vals) {
    Tensor t(std::move(shape));
    SF_CHECK(static_cast<Index>(vals.size()) == t.numel(),
             "Tensor::from: " << vals.size() << " values for shape "
                              << shape_str(t.shape()));
    Index i = 0;
    for (S v : vals) t.value()(i++) = v;
    return t;
  }

  static Tensor uniform(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (Index i = 0; i < t.numel(); ++i) t.value()(i) = static_cast<S>(rng.uniform(lo, hi));
    return t;
  }

  static Tensor normal(Shape shape, Rng& rng, double mean = 0.0, double stddev = 1.0) {
    Tensor t(std::move(shape));
    for (Index i = 0; i < t.numel(); ++i) t.value()(i) = static_cast<S>(rng.normal(mean, stddev));
    return t;
  }

  bool defined() const { return d_ != nullptr; }
  const Shape& shape() const { return d_->shape; }
  Index rank() const { return static_cast<Index>(d_->shape.size()); }
  Index dim(Index i) const { return d_->shape[static_cast<std::size_t>(i)]; }
  Index numel() const { return d_->value.size(); }

  Array<S>& value() { return d_->value; }
  const Array<S>& value() const { return d_->value; }
  S* data() { return d_->value.data(); }
  const S* data() const { return d_->value.data(); }

  // Scalar convenience accessor.
  S item() const {
    SF_CHECK(numel() == 1, "item(): tensor has " << numel() << " elements");
    return d_->value(0);
  }

  bool requires_grad() const { return d_ && d_->tape != nullptr; }
  Tape<S>* tape() const { return d_ ? d_->tape : nullptr; }
  void attach(Tape<S>* tape) { d_->tape = tape; }

  Array<S>& grad() { return d_->grad; }
  const Array<S>& grad() const { return d_->grad; }
  bool has_grad() const { return d_->grad.size() == numel(); }

  void zero_grad() {
    if (d_->grad.size() != numel()) d_->grad = Array<S>::Zero(numel());
    else d_->grad.setZero();
  }

  void accumulate_grad(const Eigen::Ref<const Array<S>>& g) {
    SF_CHECK(g.size() == numel(), "grad accumulation: size " << g.size()
                                  << " into tensor of " << numel());
    if (d_->grad.size() != numel()) d_->grad = g;
    else d_->grad += g;
  }

  // Value copy detached from any tape.
  Tensor detached() const {
    Tensor t;
    t.d_ = std::make_shared<TensorStorage<S>>();
    t.d_->shape = d_->shape;
    t.d_->value = d_->value;
    return t;
  }

  template <class S2>
  Tensor<S2> cast() const {
    Tensor<S2> t{d_->shape};
    t.value() = d_->value.template cast<S2>();
    return t;
  }

  bool all_finite() const { return d_->value.isFinite().all(); }

  bool same_storage(const Tensor& other) const { return d_ == other.d_; }

 private:
  std::shared_ptr<TensorStorage<S>> d_;

  template <class>
  friend class Tensor;
};

// Reverse-mode tape: an ordered op record. Each recorded node is a closure
// that pulls the output grad(s) it captured and pushes contributions into its
// inputs. backward() replays nodes newest-first, which realizes the chain
// rule for the DAG in a single pass because node order extends data order.
template <class S>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  ~Tape() {
    for (auto& leaf : leaves_) {
      if (leaf.defined()) leaf.attach(nullptr);
    }
  }

  // Marks a leaf whose gradient should be available after backward().
  void watch(Tensor<S> t) {
    t.attach(this);
    t.zero_grad();
    leaves_.push_back(std::move(t));
  }

  void record(std::function<void()> backward_fn) {
    nodes_.push_back(std::move(backward_fn));
  }

  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 (root must be scalar) and propagates.
  void backward(Tensor<S> root) {
    SF_CHECK(root.numel() == 1, "backward(): root must be scalar, got "
                                << shape_str(root.shape()));
    Array<S> seed = Array<S>::Ones(1);
    backward(std::move(root), seed);
  }

  void backward(Tensor<S> root, const Array<S>& seed) {
    SF_CHECK(root.tape() == this, "backward(): root is not on this tape");
    root.accumulate_grad(seed);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

  // Drops recorded nodes and re-zeros leaf grads; leaves stay watched.
  void reset() {
    nodes_.clear();
    for (auto& leaf : leaves_) leaf.zero_grad();
  }

 private:
  std::vector<std::function<void()>> nodes_;
  std::vector<Tensor<S>> leaves_;
};

namespace detail {

// Tape propagation rule for ops: the output records onto the first input
// tape found. Mixing tapes in one expression is a caller bug.
template <class S>
Tape<S>* tape_of(std::initializer_list<const Tensor<S>*> inputs) {
  Tape<S>* found = nullptr;
  for (const Tensor<S>* t : inputs) {
    if (!t->defined()) continue;
    Tape<S>* tp = t->tape();
    if (tp == nullptr) continue;
    SF_CHECK(found == nullptr || found == tp, "op inputs live on different tapes");
    found = tp;
  }
  return found;
}

}  // namespace detail

}  // namespace splatforge
