#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "forge/numcore/tensor.hpp"

namespace forge::num {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recorder for the fixed op set below. A tape is used by one
// thread for one evaluation; create a fresh tape per forward pass.
class Tape {
 public:
  using Backward = std::function<void(const Tensor& upstream, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a trainable leaf. Gradients are kept for every parameter.
  Var parameter(std::string name, Tensor value);
  Var constant(Tensor value);

  // Records an op result. The backward closure is dropped when none of the
  // inputs needs a gradient.
  Var record(Tensor value, std::span<const Var> inputs, Backward backward);

  bool requires_grad(Var v) const;
  void accumulate(Var target, std::span<const double> grad);

  // Seeds d(output)/d(output) = 1 and propagates. Output must hold one value.
  void backward(Var output);

  const Tensor& value(Var v) const;
  Tensor grad(Var v) const;
  const std::string& name(Var v) const;
  const std::vector<Var>& parameters() const noexcept { return params_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::string name;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    Backward backward;
  };

  const Node& node(Var v) const;

  std::deque<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::vector<Var> params_;
};

// ---- differentiable ops (mirror the Tensor versions in ops.hpp) ----

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var scale(Var a, double s);
Var hadamard(Var a, Var b);
Var sum(Var a);
// sum(a * weights) with a constant weight tensor; handy for random losses.
Var weighted_sum(Var a, const Tensor& weights);
Var softmax_last(Var x);
Var bilinear_resize(Var grid, std::size_t target_h, std::size_t target_w);
Var global_mean_pool(Var grid);
Var concat_last(Var a, Var b);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var repeat_rows(Var row, std::size_t n);
Var reshape(Var a, Shape shape);

// grid [H x W x C] plus a [m x m x C] tile repeated over every m x m block.
// H and W must be multiples of m.
Var add_tiled(Var grid, Var tile);

// Addresses one row of one key/value source.
struct KeyRef {
  std::uint32_t source = 0;
  std::uint32_t row = 0;
};

// Per-query logits and softmax weights, in key_sets order.
struct AttentionTrace {
  std::vector<std::vector<double>> logits;
  std::vector<std::vector<double>> weights;
};

// Scaled dot-product attention where query r only sees the keys listed in
// key_sets[r]. keys[s] and values[s] are [n_s x C] row blocks; queries is
// [R x C]. Logits are logit_scale * q . k and the softmax runs jointly over
// all keys of a query, across sources.
Var indexed_attention(Var queries, std::span<const Var> keys, std::span<const Var> values,
                      const std::vector<std::vector<KeyRef>>& key_sets, double logit_scale,
                      AttentionTrace* trace = nullptr);

}  // namespace forge::num
