#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "vagan/tensor.hpp"

namespace vagan {

// A trainable tensor with its gradient slot and Adam moments.
struct Parameter {
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;
  std::int64_t step = 0;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

// Named parameters plus non-trainable buffers (batch-norm running
// statistics). Iteration order is lexicographic by name.
class ParameterSet {
 public:
  using ParameterMap = std::map<std::string, Parameter, std::less<>>;
  using BufferMap = std::map<std::string, Tensor, std::less<>>;

  Parameter& add(const std::string& name, Tensor init);
  Tensor& add_buffer(const std::string& name, Tensor init);

  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  Tensor& buffer(std::string_view name);
  const Tensor& buffer(std::string_view name) const;
  bool contains(std::string_view name) const;

  ParameterMap& parameters() noexcept { return parameters_; }
  const ParameterMap& parameters() const noexcept { return parameters_; }
  BufferMap& buffers() noexcept { return buffers_; }
  const BufferMap& buffers() const noexcept { return buffers_; }

  void zero_grad();
  std::size_t parameter_count() const;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  ParameterMap parameters_;
  BufferMap buffers_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Rescales all gradients so their joint L2 norm is at most this.
  std::optional<double> clip_norm;

  void validate() const;
};

struct AdamReport {
  double grad_norm = 0.0;
  double clip_scale = 1.0;
};

double global_grad_norm(const ParameterSet& params);

// One bias-corrected Adam update over every parameter in the set, after
// optional global-norm clipping. Gradients are left in place (clipped).
// Throws a numeric error naming the first parameter with a non-finite
// gradient; no parameter is modified in that case.
AdamReport adam_step(ParameterSet& params, const AdamConfig& cfg);

}  // namespace vagan
