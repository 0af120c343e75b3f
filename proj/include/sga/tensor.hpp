#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace sga {

// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 as context
// demands. Everything trains in 64-bit; gradient checks need the precision
// and desk-scale runs don't need the speed of f32.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

// Reverse-mode tape with eager evaluation: every op computes its value on
// append, backward() replays the tape in reverse. One tape per forward (or
// per batch; node reuse across instances fans gradients in naturally).
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  Tape() = default;
  // Passing false turns the whole tape into pure forward evaluation: leaves
  // come out as constants, no gradient buffers, backward() is an error.
  explicit Tape(bool track_gradients) : track_(track_gradients) {}

  // Leaf with no gradient tracking.
  Var constant(Tensor t);
  // Differentiable leaf.
  Var leaf(Tensor t);
  // Differentiable leaf tied to external storage (a model parameter). The
  // same address binds to the same node within one tape.
  Var bind(const Tensor& parameter);

  const Tensor& value(Var x) const { return node(x).value; }
  // Zero tensor of the right shape until backward() has run.
  const Tensor& grad(Var x) const { return node(x).grad; }
  // Gradient for a bound parameter; nullptr when the parameter never joined
  // this tape (its gradient is identically zero).
  const Tensor* grad_of(const Tensor& parameter) const;

  // Accumulates into grads; calling twice doubles them.
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

  // ---- ops ----
  Var matmul(Var a, Var b);        // (m,k)x(k,n)
  Var matmul_nt(Var a, Var b);     // a . b^T : (m,k)x(n,k) -> (m,n)
  Var matmul_tn(Var a, Var b);     // a^T . b : (k,m)x(k,n) -> (m,n)
  Var add(Var a, Var b);           // same shape
  Var add_row_broadcast(Var a, Var row);  // (m,n) + (1,n)
  Var scale(Var a, double c);
  Var relu(Var a);
  Var softmax_rows(Var a);
  // Softmax down a single column with masked entries pinned to exactly zero.
  Var masked_softmax_col(Var scores, const std::vector<bool>& mask);
  Var layer_norm_rows(Var x, Var gain, Var bias);
  Var mean_rows(Var a);                                  // (m,n) -> (1,n)
  Var masked_mean_rows(Var a, const std::vector<bool>& mask);
  Var concat_cols(const std::vector<Var>& parts);        // shared row count
  Var concat_rows(const std::vector<Var>& parts);        // shared col count
  Var gather_rows(Var table, const std::vector<int>& ids);
  Var cross_entropy(Var logits, int label);              // (1,C) -> (1,1)
  Var mean_of_scalars(const std::vector<Var>& scalars);  // (1,1) each

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    std::function<void(Tape&)> backprop;  // pulls this node's grad into parents
  };

  Node& node(Var x) { return nodes_[static_cast<std::size_t>(x.id)]; }
  const Node& node(Var x) const { return nodes_[static_cast<std::size_t>(x.id)]; }
  Var push(Tensor value, bool needs_grad, std::function<void(Tape&)> backprop);
  bool any_needs_grad(const std::vector<Var>& vars) const;

  bool track_ = true;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, int> bindings_;
};

// ---- plain (non-tape) helpers shared by oracles and reports ----

double dot(const std::vector<double>& a, const std::vector<double>& b);
double l2_norm(const std::vector<double>& a);
double squared_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace sga
