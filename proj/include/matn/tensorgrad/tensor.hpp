#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "matn/error.hpp"

namespace matn {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// Graph recording switch. Inference paths wrap themselves in NoGradGuard so
// forward passes over frozen parameters do not accumulate graph nodes.
class GradMode {
 public:
  static bool enabled() { return flag(); }
  static void set_enabled(bool on) { flag() = on; }

 private:
  static bool& flag() {
    thread_local bool f = true;
    return f;
  }
};

class NoGradGuard {
 public:
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

namespace detail {

template <class S>
struct Node {
  Shape shape;
  std::vector<S> values;
  std::vector<S> grad;  // allocated lazily, same length as values
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward;  // accumulates into parents' grad
  const char* op = "";

  std::int64_t numel() const { return static_cast<std::int64_t>(values.size()); }

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), S(0));
  }
};

}  // namespace detail

// Dense row-major tensor handle with reverse-mode differentiation. Copies of
// a Tensor share the same node; values() mutations are visible to all copies.
// S is float for training, double for gradcheck/oracle runs.
template <class S>
class Tensor {
 public:
  using NodePtr = std::shared_ptr<detail::Node<S>>;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), S(0), requires_grad);
  }

  static Tensor filled(Shape shape, S value, bool requires_grad = false) {
    Tensor t;
    t.node_ = std::make_shared<detail::Node<S>>();
    t.node_->shape = std::move(shape);
    t.node_->values.assign(static_cast<std::size_t>(shape_numel(t.node_->shape)), value);
    t.node_->requires_grad = requires_grad;
    return t;
  }

  static Tensor from_values(Shape shape, std::vector<S> values, bool requires_grad = false) {
    if (static_cast<std::int64_t>(values.size()) != shape_numel(shape))
      throw DimensionError("tensor data length " + std::to_string(values.size()) +
                           " does not match shape " + shape_str(shape));
    Tensor t;
    t.node_ = std::make_shared<detail::Node<S>>();
    t.node_->shape = std::move(shape);
    t.node_->values = std::move(values);
    t.node_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar(S value, bool requires_grad = false) {
    return from_values({1}, {value}, requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::int64_t dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  std::int64_t numel() const { return node_->numel(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  std::vector<S>& values() { return node_->values; }
  const std::vector<S>& values() const { return node_->values; }
  S* data() { return node_->values.data(); }
  const S* data() const { return node_->values.data(); }

  std::vector<S>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  const std::vector<S>& grad() const {
    node_->ensure_grad();
    return node_->grad;
  }

  void zero_grad() {
    if (node_) std::fill(node_->grad.begin(), node_->grad.end(), S(0));
  }

  S item() const {
    if (numel() != 1) throw UsageError("item() on non-scalar tensor " + shape_str(shape()));
    return node_->values[0];
  }

  bool all_finite() const {
    for (S v : node_->values)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  void check_finite(const char* where) const {
    if (!all_finite()) throw NumericError(std::string("non-finite values in ") + where);
  }

  NodePtr node() const { return node_; }

  // Construct a result node linked to its inputs. backward, if set, runs with
  // this node's grad populated and must accumulate (+=) into parent grads.
  static Tensor make_op(Shape shape, std::vector<S> values, const char* op,
                        std::vector<Tensor> inputs, std::function<void()> backward) {
    Tensor t = from_values(std::move(shape), std::move(values));
    bool rg = false;
    if (GradMode::enabled())
      for (const auto& in : inputs) rg = rg || in.requires_grad();
    t.node_->requires_grad = rg;
    t.node_->op = op;
    if (rg) {
      for (auto& in : inputs) t.node_->parents.push_back(in.node_);
      t.node_->backward = std::move(backward);
    }
    return t;
  }

  // Reverse-mode sweep from a scalar loss. Gradients accumulate additively in
  // every reachable requires_grad node; the recorded graph is released after
  // the sweep so parameters can be reused next step.
  void backward() {
    if (!node_) throw UsageError("backward() on empty tensor");
    if (numel() != 1) throw UsageError("backward() requires a scalar, got " + shape_str(shape()));
    if (!node_->requires_grad)
      throw UsageError("backward() on a detached tensor: nothing requires grad");

    std::vector<detail::Node<S>*> order;
    std::unordered_set<detail::Node<S>*> seen;
    topo(node_.get(), seen, order);

    for (auto* n : order) n->ensure_grad();
    node_->grad[0] = S(1);

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if ((*it)->backward) (*it)->backward();
    }
    // free the graph; leaves keep their grads
    for (auto* n : order) {
      n->backward = nullptr;
      n->parents.clear();
    }
  }

 private:
  static void topo(detail::Node<S>* n, std::unordered_set<detail::Node<S>*>& seen,
                   std::vector<detail::Node<S>*>& order) {
    // iterative DFS; graphs can be deep for long chains
    struct Frame {
      detail::Node<S>* node;
      std::size_t next_child;
    };
    std::vector<Frame> stack{{n, 0}};
    seen.insert(n);
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next_child < f.node->parents.size()) {
        detail::Node<S>* child = f.node->parents[f.next_child++].get();
        if (child->requires_grad && !seen.count(child)) {
          seen.insert(child);
          stack.push_back({child, 0});
        }
      } else {
        order.push_back(f.node);
        stack.pop_back();
      }
    }
  }

  NodePtr node_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace matn
