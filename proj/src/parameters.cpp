#include "vagan/parameters.hpp"

#include <cmath>

#include "vagan/error.hpp"

namespace vagan {

Parameter& ParameterSet::add(const std::string& name, Tensor init) {
  if (parameters_.contains(name) || buffers_.contains(name)) {
    throw Error(ErrorKind::config, "duplicate parameter name '" + name + "'");
  }
  Parameter p;
  p.grad = Tensor::zeros_like(init);
  p.m = Tensor::zeros_like(init);
  p.v = Tensor::zeros_like(init);
  p.value = std::move(init);
  return parameters_.emplace(name, std::move(p)).first->second;
}

Tensor& ParameterSet::add_buffer(const std::string& name, Tensor init) {
  if (parameters_.contains(name) || buffers_.contains(name)) {
    throw Error(ErrorKind::config, "duplicate parameter name '" + name + "'");
  }
  return buffers_.emplace(name, std::move(init)).first->second;
}

Parameter& ParameterSet::at(std::string_view name) {
  auto it = parameters_.find(name);
  if (it == parameters_.end()) {
    throw Error(ErrorKind::config, "unknown parameter '" + std::string(name) + "'");
  }
  return it->second;
}

const Parameter& ParameterSet::at(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

Tensor& ParameterSet::buffer(std::string_view name) {
  auto it = buffers_.find(name);
  if (it == buffers_.end()) {
    throw Error(ErrorKind::config, "unknown buffer '" + std::string(name) + "'");
  }
  return it->second;
}

const Tensor& ParameterSet::buffer(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->buffer(name);
}

bool ParameterSet::contains(std::string_view name) const {
  return parameters_.find(name) != parameters_.end() || buffers_.find(name) != buffers_.end();
}

void ParameterSet::zero_grad() {
  for (auto& [name, p] : parameters_) p.grad.fill(0.0);
}

std::size_t ParameterSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : parameters_) n += p.value.size();
  return n;
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::config, "learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw Error(ErrorKind::config, "beta1 must lie in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw Error(ErrorKind::config, "beta2 must lie in (0,1)");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::config, "epsilon must be positive");
  if (clip_norm && !(*clip_norm > 0.0)) {
    throw Error(ErrorKind::config, "clip norm must be positive");
  }
}

double global_grad_norm(const ParameterSet& params) {
  double sq = 0.0;
  for (const auto& [name, p] : params.parameters()) {
    for (double g : p.grad.values()) sq += g * g;
  }
  return std::sqrt(sq);
}

AdamReport adam_step(ParameterSet& params, const AdamConfig& cfg) {
  cfg.validate();
  for (const auto& [name, p] : params.parameters()) {
    if (p.grad.size() != p.value.size()) {
      throw Error(ErrorKind::numeric, "parameter '" + name + "' has no gradient");
    }
    if (!p.grad.all_finite()) {
      throw Error(ErrorKind::numeric, "non-finite gradient in parameter '" + name + "'");
    }
  }

  AdamReport report;
  report.grad_norm = global_grad_norm(params);
  if (cfg.clip_norm && report.grad_norm > *cfg.clip_norm) {
    report.clip_scale = *cfg.clip_norm / report.grad_norm;
  }

  for (auto& [name, p] : params.parameters()) {
    ++p.step;
    const double t = static_cast<double>(p.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      if (report.clip_scale != 1.0) p.grad[i] *= report.clip_scale;
      const double g = p.grad[i];
      p.m[i] = cfg.beta1 * p.m[i] + (1.0 - cfg.beta1) * g;
      p.v[i] = cfg.beta2 * p.v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = p.m[i] / correction1;
      const double v_hat = p.v[i] / correction2;
      p.value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
  return report;
}

}  // namespace vagan
