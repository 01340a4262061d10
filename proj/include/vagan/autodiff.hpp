#pragma once

// Tape-based reverse-mode autodiff with exactly the layers the generator and
// discriminator need. A Graph records nodes in creation order; backward()
// walks them in reverse. A Graph is single-threaded and not copyable.

#include <cstddef>
#include <deque>
#include <functional>

#include "vagan/parameters.hpp"
#include "vagan/random.hpp"
#include "vagan/tensor.hpp"

namespace vagan {

enum class Mode { train, infer };

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while its Graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  // Gradient accumulated by the last backward(); zeros if none arrived.
  Tensor grad() const;

  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  using BackwardFn = std::function<void(const Tensor& grad_out)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf that never receives gradients.
  Var constant(Tensor value);
  // Leaf whose gradient is kept in the graph (read via Var::grad()).
  Var variable(Tensor value);
  // Leaf bound to a parameter by reference. When trainable, gradients are
  // accumulated directly into param.grad; the caller zeroes them.
  Var parameter(Parameter& param, bool trainable = true);

  // Seeds d(output)/d(output) = 1 on a single-element node and propagates.
  void backward(Var output);

  std::size_t size() const noexcept { return nodes_.size(); }

  // --- for layer implementations ---------------------------------------
  // Records an op result. `backward` is dropped when requires_grad is false.
  Var record(Tensor value, bool requires_grad, BackwardFn backward);
  const Tensor& value_of(std::size_t id) const;
  bool requires_grad_of(std::size_t id) const;
  // Gradient accumulator for a node, allocated as zeros on first use.
  Tensor& grad_slot(Var v);

 private:
  friend class Var;

  struct Node {
    Tensor value;
    const Tensor* external_value = nullptr;
    Tensor grad;
    Tensor* external_grad = nullptr;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::deque<Node> nodes_;
};

// --- layers ----------------------------------------------------------------

// [B x I] * [I x O] + [O].
Var dense(Var input, Var weights, Var bias);

// SAME-padded strided convolution. input [B,H,W,Cin], kernel [k,k,Cin,Cout].
Var conv2d(Var input, Var kernel, std::size_t stride);

// Transposed convolution, defined as the adjoint of conv2d with the same
// kernel tensor read as [k,k,Cout,Cin]: input [B,H,W,Cin] gives
// [B, H*stride, W*stride, Cout].
Var deconv2d(Var input, Var kernel, std::size_t stride);

// Adds a per-channel bias along the last axis.
Var add_channel_bias(Var input, Var bias);

struct BatchNormOptions {
  Mode mode = Mode::train;
  double momentum = 0.99;
  double epsilon = 1e-5;
  // Train mode only: fold the batch statistics into the running buffers.
  bool update_running = true;
};

// Normalizes over every axis except the last (channel) one.
Var batch_norm(Var input, Var gamma, Var beta, Tensor& running_mean, Tensor& running_var,
               const BatchNormOptions& opts);

enum class Activation { relu, lrelu, tanh, sigmoid };

Var activation(Var input, Activation kind, double slope = 0.2);

// Inverted dropout: train mode zeroes each element with probability
// 1 - keep_prob and scales survivors by 1 / keep_prob. Infer mode is identity.
Var dropout(Var input, double keep_prob, Mode mode, Rng& rng);

// [B,H,W,C] -> [B,C] spatial mean.
Var global_avg_pool(Var input);

Var reshape(Var input, Shape shape);

// Columns [first, first + count) of a [B x N] matrix.
Var slice_columns(Var input, std::size_t first, std::size_t count);

// Stacks b after a along the batch axis; trailing dims must match.
Var concat_batch(Var a, Var b);
// Batch entries [first, first + count).
Var slice_batch(Var input, std::size_t first, std::size_t count);

// Scalar arithmetic on single-element nodes.
Var add(Var a, Var b);
Var scale(Var a, double factor);

Var sum(Var input);
// Sum of input * weights elementwise; weights are constant.
Var weighted_sum(Var input, const Tensor& weights);

}  // namespace vagan
