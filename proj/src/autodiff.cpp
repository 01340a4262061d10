#include "vagan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vagan/error.hpp"
#include "vagan/kernels.hpp"

namespace vagan {

// --- Var / Graph -------------------------------------------------------------

const Tensor& Var::value() const { return graph_->value_of(id_); }

bool Var::requires_grad() const { return graph_->requires_grad_of(id_); }

Tensor Var::grad() const {
  const auto& n = graph_->node(*this);
  if (n.external_grad != nullptr) return *n.external_grad;
  if (n.has_grad) return n.grad;
  return Tensor::zeros_like(value());
}

Graph::Node& Graph::node(Var v) {
  if (v.graph_ != this || v.id_ >= nodes_.size()) {
    throw Error(ErrorKind::usage, "variable does not belong to this graph");
  }
  return nodes_[v.id_];
}

const Graph::Node& Graph::node(Var v) const { return const_cast<Graph*>(this)->node(v); }

const Tensor& Graph::value_of(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external_value != nullptr ? *n.external_value : n.value;
}

bool Graph::requires_grad_of(std::size_t id) const { return nodes_.at(id).requires_grad; }

Var Graph::constant(Tensor value) { return record(std::move(value), false, nullptr); }

Var Graph::variable(Tensor value) { return record(std::move(value), true, nullptr); }

Var Graph::parameter(Parameter& param, bool trainable) {
  Node n;
  n.external_value = &param.value;
  n.requires_grad = trainable;
  if (trainable) {
    if (param.grad.shape() != param.value.shape()) param.grad = Tensor::zeros_like(param.value);
    n.external_grad = &param.grad;
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, bool requires_grad, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Tensor& Graph::grad_slot(Var v) {
  Node& n = node(v);
  if (n.external_grad != nullptr) return *n.external_grad;
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(value_of(v.id_));
    n.has_grad = true;
  }
  return n.grad;
}

void Graph::backward(Var output) {
  Node& out = node(output);
  if (value_of(output.id_).size() != 1) {
    throw Error(ErrorKind::dimension, "backward() needs a single-element output, got " +
                                          shape_string(value_of(output.id_).shape()));
  }
  if (!out.requires_grad) return;
  grad_slot(output)[0] += 1.0;
  for (std::size_t i = output.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.has_grad) n.backward(n.grad);
  }
}

// --- helpers -----------------------------------------------------------------

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* operand) {
  if (t.rank() != rank) {
    throw Error(ErrorKind::dimension, std::string(op) + ": " + operand + " must have rank " +
                                          std::to_string(rank) + ", got " +
                                          shape_string(t.shape()));
  }
}

void require_axis(std::size_t actual, std::size_t expected, const char* op, const char* axis) {
  if (actual != expected) {
    throw Error(ErrorKind::dimension, std::string(op) + ": axis " + axis + " is " +
                                          std::to_string(actual) + ", expected " +
                                          std::to_string(expected));
  }
}

void require_same_graph(Var a, Var b) {
  if (&a.graph() != &b.graph()) {
    throw Error(ErrorKind::usage, "operands belong to different graphs");
  }
}

void add_into(Tensor& dst, const Tensor& src) {
  double* d = dst.data();
  const double* s = src.data();
  const auto n = static_cast<std::int64_t>(src.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) d[i] += s[i];
}

}  // namespace

// --- dense -------------------------------------------------------------------

Var dense(Var input, Var weights, Var bias) {
  require_same_graph(input, weights);
  require_same_graph(input, bias);
  const Tensor& x = input.value();
  const Tensor& w = weights.value();
  const Tensor& b = bias.value();
  require_rank(x, 2, "dense", "input");
  require_rank(w, 2, "dense", "weights");
  require_rank(b, 1, "dense", "bias");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(1);
  require_axis(w.dim(0), in, "dense", "weights[0] (input features)");
  require_axis(b.dim(0), out, "dense", "bias[0] (output features)");

  Tensor y({batch, out});
  kernels::gemm(kernels::Transpose::no, kernels::Transpose::no, batch, out, in, x.values(),
                w.values(), y.values(), false);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t c = 0; c < out; ++c) y[r * out + c] += b[c];
  }

  Graph& g = input.graph();
  const bool rg = input.requires_grad() || weights.requires_grad() || bias.requires_grad();
  return g.record(std::move(y), rg, [&g, input, weights, bias, batch, in, out](const Tensor& gy) {
    if (input.requires_grad()) {
      kernels::gemm(kernels::Transpose::no, kernels::Transpose::yes, batch, in, out, gy.values(),
                    weights.value().values(), g.grad_slot(input).values(), true);
    }
    if (weights.requires_grad()) {
      kernels::gemm(kernels::Transpose::yes, kernels::Transpose::no, in, out, batch,
                    input.value().values(), gy.values(), g.grad_slot(weights).values(), true);
    }
    if (bias.requires_grad()) {
      Tensor& gb = g.grad_slot(bias);
      for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t c = 0; c < out; ++c) gb[c] += gy[r * out + c];
      }
    }
  });
}

// --- convolution ---------------------------------------------------------------

Var conv2d(Var input, Var kernel, std::size_t stride) {
  require_same_graph(input, kernel);
  const Tensor& x = input.value();
  const Tensor& k = kernel.value();
  require_rank(x, 4, "conv2d", "input");
  require_rank(k, 4, "conv2d", "kernel");
  if (stride == 0) throw Error(ErrorKind::dimension, "conv2d: stride must be positive");
  require_axis(k.dim(1), k.dim(0), "conv2d", "kernel[1] (kernel width)");
  require_axis(k.dim(2), x.dim(3), "conv2d", "kernel[2] (input channels)");
  const auto geo = kernels::ConvGeometry::same(x.dim(0), x.dim(1), x.dim(2), x.dim(3), k.dim(3),
                                               k.dim(0), stride);
  Tensor y({geo.batch, geo.out_h, geo.out_w, geo.out_c});
  kernels::conv2d_forward(geo, x.values(), k.values(), y.values());

  Graph& g = input.graph();
  const bool rg = input.requires_grad() || kernel.requires_grad();
  return g.record(std::move(y), rg, [&g, input, kernel, geo](const Tensor& gy) {
    if (input.requires_grad()) {
      kernels::conv2d_backward_input(geo, gy.values(), kernel.value().values(),
                                     g.grad_slot(input).values());
    }
    if (kernel.requires_grad()) {
      kernels::conv2d_backward_kernel(geo, input.value().values(), gy.values(),
                                      g.grad_slot(kernel).values());
    }
  });
}

Var deconv2d(Var input, Var kernel, std::size_t stride) {
  require_same_graph(input, kernel);
  const Tensor& x = input.value();
  const Tensor& k = kernel.value();
  require_rank(x, 4, "deconv2d", "input");
  require_rank(k, 4, "deconv2d", "kernel");
  if (stride == 0) throw Error(ErrorKind::dimension, "deconv2d: stride must be positive");
  require_axis(k.dim(1), k.dim(0), "deconv2d", "kernel[1] (kernel width)");
  require_axis(k.dim(3), x.dim(3), "deconv2d", "kernel[3] (input channels)");
  // The convolution this op is the adjoint of maps [B, sH, sW, Cout] to
  // [B, H, W, Cin].
  const auto geo = kernels::ConvGeometry::same(x.dim(0), x.dim(1) * stride, x.dim(2) * stride,
                                               k.dim(2), k.dim(3), k.dim(0), stride);
  require_axis(geo.out_h, x.dim(1), "deconv2d", "input[1] (height)");
  Tensor y({geo.batch, geo.in_h, geo.in_w, geo.in_c});
  kernels::conv2d_backward_input(geo, x.values(), k.values(), y.values());

  Graph& g = input.graph();
  const bool rg = input.requires_grad() || kernel.requires_grad();
  return g.record(std::move(y), rg, [&g, input, kernel, geo](const Tensor& gy) {
    if (input.requires_grad()) {
      Tensor gx = Tensor::zeros_like(input.value());
      kernels::conv2d_forward(geo, gy.values(), kernel.value().values(), gx.values());
      add_into(g.grad_slot(input), gx);
    }
    if (kernel.requires_grad()) {
      kernels::conv2d_backward_kernel(geo, gy.values(), input.value().values(),
                                      g.grad_slot(kernel).values());
    }
  });
}

Var add_channel_bias(Var input, Var bias) {
  require_same_graph(input, bias);
  const Tensor& x = input.value();
  const Tensor& b = bias.value();
  require_rank(b, 1, "add_channel_bias", "bias");
  const std::size_t channels = x.shape().back();
  require_axis(b.dim(0), channels, "add_channel_bias", "bias[0] (channels)");
  Tensor y = x;
  const std::size_t rows = x.size() / channels;
  const auto nrows = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < nrows; ++r) {
    double* row = y.data() + static_cast<std::size_t>(r) * channels;
    for (std::size_t c = 0; c < channels; ++c) row[c] += b[c];
  }
  Graph& g = input.graph();
  const bool rg = input.requires_grad() || bias.requires_grad();
  return g.record(std::move(y), rg, [&g, input, bias, channels](const Tensor& gy) {
    if (input.requires_grad()) add_into(g.grad_slot(input), gy);
    if (bias.requires_grad()) {
      std::vector<double> sums(channels);
      kernels::channel_sums(gy.values(), channels, sums);
      Tensor& gb = g.grad_slot(bias);
      for (std::size_t c = 0; c < channels; ++c) gb[c] += sums[c];
    }
  });
}

// --- batch norm ----------------------------------------------------------------

Var batch_norm(Var input, Var gamma, Var beta, Tensor& running_mean, Tensor& running_var,
               const BatchNormOptions& opts) {
  require_same_graph(input, gamma);
  require_same_graph(input, beta);
  const Tensor& x = input.value();
  const std::size_t channels = x.shape().back();
  const std::size_t rows = x.size() / channels;
  require_axis(gamma.value().size(), channels, "batch_norm", "gamma[0] (channels)");
  require_axis(beta.value().size(), channels, "batch_norm", "beta[0] (channels)");
  require_axis(running_mean.size(), channels, "batch_norm", "running_mean[0] (channels)");
  require_axis(running_var.size(), channels, "batch_norm", "running_var[0] (channels)");
  if (opts.mode == Mode::train && x.dim(0) < 2) {
    throw Error(ErrorKind::dimension, "batch_norm: degenerate batch of size " +
                                          std::to_string(x.dim(0)) + " in train mode");
  }

  std::vector<double> mean(channels), inv_std(channels);
  if (opts.mode == Mode::train) {
    kernels::channel_sums(x.values(), channels, mean);
    for (double& m : mean) m /= static_cast<double>(rows);
    Tensor centered = x;
    const auto nrows = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < nrows; ++r) {
      double* row = centered.data() + static_cast<std::size_t>(r) * channels;
      for (std::size_t c = 0; c < channels; ++c) row[c] -= mean[c];
    }
    std::vector<double> var(channels);
    kernels::channel_dot(centered.values(), centered.values(), channels, var);
    for (std::size_t c = 0; c < channels; ++c) {
      var[c] /= static_cast<double>(rows);
      inv_std[c] = 1.0 / std::sqrt(var[c] + opts.epsilon);
    }
    if (opts.update_running) {
      for (std::size_t c = 0; c < channels; ++c) {
        running_mean[c] = opts.momentum * running_mean[c] + (1.0 - opts.momentum) * mean[c];
        running_var[c] = opts.momentum * running_var[c] + (1.0 - opts.momentum) * var[c];
      }
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(running_var[c] + opts.epsilon);
    }
  }

  Tensor normalized(x.shape());
  Tensor y(x.shape());
  const Tensor& gm = gamma.value();
  const Tensor& bt = beta.value();
  {
    const auto nrows = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < nrows; ++r) {
      const std::size_t base = static_cast<std::size_t>(r) * channels;
      for (std::size_t c = 0; c < channels; ++c) {
        const double xh = (x[base + c] - mean[c]) * inv_std[c];
        normalized[base + c] = xh;
        y[base + c] = gm[c] * xh + bt[c];
      }
    }
  }

  Graph& g = input.graph();
  const bool rg = input.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  const bool batch_stats = opts.mode == Mode::train;
  return g.record(
      std::move(y), rg,
      [&g, input, gamma, beta, channels, rows, batch_stats, inv_std = std::move(inv_std),
       normalized = std::move(normalized)](const Tensor& gy) {
        std::vector<double> sum_gy(channels), sum_gy_xh(channels);
        kernels::channel_sums(gy.values(), channels, sum_gy);
        kernels::channel_dot(gy.values(), normalized.values(), channels, sum_gy_xh);
        if (gamma.requires_grad()) {
          Tensor& gg = g.grad_slot(gamma);
          for (std::size_t c = 0; c < channels; ++c) gg[c] += sum_gy_xh[c];
        }
        if (beta.requires_grad()) {
          Tensor& gb = g.grad_slot(beta);
          for (std::size_t c = 0; c < channels; ++c) gb[c] += sum_gy[c];
        }
        if (input.requires_grad()) {
          Tensor& gx = g.grad_slot(input);
          const Tensor& gm = gamma.value();
          const double n = static_cast<double>(rows);
          const auto nrows = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
          for (std::int64_t r = 0; r < nrows; ++r) {
            const std::size_t base = static_cast<std::size_t>(r) * channels;
            for (std::size_t c = 0; c < channels; ++c) {
              const double scale = gm[c] * inv_std[c];
              if (batch_stats) {
                gx[base + c] += scale * (gy[base + c] - sum_gy[c] / n -
                                         normalized[base + c] * sum_gy_xh[c] / n);
              } else {
                gx[base + c] += scale * gy[base + c];
              }
            }
          }
        }
      });
}

// --- elementwise -------------------------------------------------------------

namespace {

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var activation(Var input, Activation kind, double slope) {
  const Tensor& x = input.value();
  Tensor y(x.shape());
  const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = x[static_cast<std::size_t>(i)];
    double out = 0.0;
    switch (kind) {
      case Activation::relu: out = v > 0.0 ? v : 0.0; break;
      case Activation::lrelu: out = v > 0.0 ? v : slope * v; break;
      case Activation::tanh: out = std::tanh(v); break;
      case Activation::sigmoid: out = sigmoid_value(v); break;
    }
    y[static_cast<std::size_t>(i)] = out;
  }
  Graph& g = input.graph();
  return g.record(std::move(y), input.requires_grad(), [&g, input, kind, slope](const Tensor& gy) {
    const Tensor& x = input.value();
    Tensor& gx = g.grad_slot(input);
    const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double v = x[k];
      double d = 0.0;
      switch (kind) {
        case Activation::relu: d = v > 0.0 ? 1.0 : 0.0; break;
        case Activation::lrelu: d = v > 0.0 ? 1.0 : slope; break;
        case Activation::tanh: {
          const double t = std::tanh(v);
          d = 1.0 - t * t;
          break;
        }
        case Activation::sigmoid: {
          const double s = sigmoid_value(v);
          d = s * (1.0 - s);
          break;
        }
      }
      gx[k] += gy[k] * d;
    }
  });
}

Var dropout(Var input, double keep_prob, Mode mode, Rng& rng) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw Error(ErrorKind::config, "dropout keep probability must lie in (0, 1]");
  }
  if (mode == Mode::infer || keep_prob == 1.0) return input;
  const Tensor& x = input.value();
  Tensor mask(x.shape());
  const double scale = 1.0 / keep_prob;
  // Mask draws are serial so the sequence depends only on the engine state.
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = uniform01(rng) < keep_prob ? scale : 0.0;
  Tensor y(x.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * mask[i];
  Graph& g = input.graph();
  return g.record(std::move(y), input.requires_grad(),
                  [&g, input, mask = std::move(mask)](const Tensor& gy) {
                    Tensor& gx = g.grad_slot(input);
                    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * mask[i];
                  });
}

Var global_avg_pool(Var input) {
  const Tensor& x = input.value();
  require_rank(x, 4, "global_avg_pool", "input");
  const std::size_t batch = x.dim(0), spatial = x.dim(1) * x.dim(2), channels = x.dim(3);
  Tensor y({batch, channels});
  const double inv = 1.0 / static_cast<double>(spatial);
  for (std::size_t b = 0; b < batch; ++b) {
    std::span<const double> image(x.data() + b * spatial * channels, spatial * channels);
    std::span<double> out(y.data() + b * channels, channels);
    kernels::channel_sums(image, channels, out);
    for (double& v : out) v *= inv;
  }
  Graph& g = input.graph();
  return g.record(std::move(y), input.requires_grad(),
                  [&g, input, batch, spatial, channels, inv](const Tensor& gy) {
                    Tensor& gx = g.grad_slot(input);
                    for (std::size_t b = 0; b < batch; ++b) {
                      for (std::size_t p = 0; p < spatial; ++p) {
                        double* row = gx.data() + (b * spatial + p) * channels;
                        for (std::size_t c = 0; c < channels; ++c) {
                          row[c] += gy[b * channels + c] * inv;
                        }
                      }
                    }
                  });
}

Var reshape(Var input, Shape shape) {
  Tensor y = input.value().reshaped(std::move(shape));
  Graph& g = input.graph();
  return g.record(std::move(y), input.requires_grad(), [&g, input](const Tensor& gy) {
    Tensor& gx = g.grad_slot(input);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
  });
}

Var slice_columns(Var input, std::size_t first, std::size_t count) {
  const Tensor& x = input.value();
  require_rank(x, 2, "slice_columns", "input");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (count == 0 || first + count > cols) {
    throw Error(ErrorKind::dimension, "slice_columns: columns [" + std::to_string(first) + ", " +
                                          std::to_string(first + count) + ") out of range for " +
                                          shape_string(x.shape()));
  }
  Tensor y({rows, count});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < count; ++c) y[r * count + c] = x[r * cols + first + c];
  }
  Graph& g = input.graph();
  return g.record(std::move(y), input.requires_grad(),
                  [&g, input, rows, cols, first, count](const Tensor& gy) {
                    Tensor& gx = g.grad_slot(input);
                    for (std::size_t r = 0; r < rows; ++r) {
                      for (std::size_t c = 0; c < count; ++c) {
                        gx[r * cols + first + c] += gy[r * count + c];
                      }
                    }
                  });
}

Var concat_batch(Var a, Var b) {
  require_same_graph(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rank() == 0 || x.rank() != y.rank() ||
      !std::equal(x.shape().begin() + 1, x.shape().end(), y.shape().begin() + 1)) {
    throw Error(ErrorKind::dimension, "concat_batch: " + shape_string(x.shape()) + " and " +
                                          shape_string(y.shape()) + " differ past the batch axis");
  }
  Shape shape = x.shape();
  shape[0] += y.dim(0);
  Tensor out(shape);
  std::copy(x.data(), x.data() + x.size(), out.data());
  std::copy(y.data(), y.data() + y.size(), out.data() + x.size());
  Graph& g = a.graph();
  const std::size_t na = x.size();
  return g.record(std::move(out), a.requires_grad() || b.requires_grad(),
                  [&g, a, b, na](const Tensor& gy) {
                    if (a.requires_grad()) {
                      Tensor& ga = g.grad_slot(a);
                      for (std::size_t i = 0; i < na; ++i) ga[i] += gy[i];
                    }
                    if (b.requires_grad()) {
                      Tensor& gb = g.grad_slot(b);
                      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[na + i];
                    }
                  });
}

Var slice_batch(Var input, std::size_t first, std::size_t count) {
  const Tensor& x = input.value();
  if (x.rank() == 0 || count == 0 || first + count > x.dim(0)) {
    throw Error(ErrorKind::dimension, "slice_batch: entries [" + std::to_string(first) + ", " +
                                          std::to_string(first + count) + ") out of range for " +
                                          shape_string(x.shape()));
  }
  Shape shape = x.shape();
  shape[0] = count;
  Tensor y(shape);
  const std::size_t offset = first * (x.size() / x.dim(0));
  std::copy(x.data() + offset, x.data() + offset + y.size(), y.data());
  Graph& g = input.graph();
  return g.record(std::move(y), input.requires_grad(), [&g, input, offset](const Tensor& gy) {
    Tensor& gx = g.grad_slot(input);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[offset + i] += gy[i];
  });
}

Var add(Var a, Var b) {
  require_same_graph(a, b);
  const double value = a.value().item() + b.value().item();
  Graph& g = a.graph();
  const bool rg = a.requires_grad() || b.requires_grad();
  return g.record(Tensor::scalar(value), rg, [&g, a, b](const Tensor& gy) {
    if (a.requires_grad()) g.grad_slot(a)[0] += gy[0];
    if (b.requires_grad()) g.grad_slot(b)[0] += gy[0];
  });
}

Var scale(Var a, double factor) {
  const double value = factor * a.value().item();
  Graph& g = a.graph();
  return g.record(Tensor::scalar(value), a.requires_grad(), [&g, a, factor](const Tensor& gy) {
    g.grad_slot(a)[0] += factor * gy[0];
  });
}

Var sum(Var input) {
  const Tensor& x = input.value();
  double total = 0.0;
  for (double v : x.values()) total += v;
  Graph& g = input.graph();
  return g.record(Tensor::scalar(total), input.requires_grad(), [&g, input](const Tensor& gy) {
    Tensor& gx = g.grad_slot(input);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[0];
  });
}

Var weighted_sum(Var input, const Tensor& weights) {
  const Tensor& x = input.value();
  if (weights.size() != x.size()) {
    throw Error(ErrorKind::dimension, "weighted_sum: weights " + shape_string(weights.shape()) +
                                          " do not match input " + shape_string(x.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += x[i] * weights[i];
  Graph& g = input.graph();
  return g.record(Tensor::scalar(total), input.requires_grad(),
                  [&g, input, weights](const Tensor& gy) {
                    Tensor& gx = g.grad_slot(input);
                    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[0] * weights[i];
                  });
}

}  // namespace vagan
