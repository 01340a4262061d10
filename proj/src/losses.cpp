#include "vagan/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "vagan/error.hpp"

namespace vagan {

namespace {

void require_finite(std::span<const double> logits, const char* what) {
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      throw Error(ErrorKind::numeric, std::string(what) + ": non-finite logit at index " +
                                          std::to_string(i));
    }
  }
}

// log(1 + exp(s)) without overflow.
double softplus(double s) { return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))); }

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double huber_slope(double a, double delta) {
  if (std::abs(a) <= delta) return a;
  return a > 0.0 ? delta : -delta;
}

}  // namespace

CccBreakdown ccc(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorKind::dimension, "ccc: length mismatch (" + std::to_string(pred.size()) +
                                          " vs " + std::to_string(truth.size()) + ")");
  }
  if (pred.size() < 2) throw Error(ErrorKind::dimension, "ccc: need at least two samples");
  const double n = static_cast<double>(pred.size());
  CccBreakdown out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    out.mean_x += pred[i];
    out.mean_y += truth[i];
  }
  out.mean_x /= n;
  out.mean_y /= n;
  // Exact mean for constant sequences.
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
  };
  if (constant(pred)) out.mean_x = pred[0];
  if (constant(truth)) out.mean_y = truth[0];
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dx = pred[i] - out.mean_x;
    const double dy = truth[i] - out.mean_y;
    out.var_x += dx * dx;
    out.var_y += dy * dy;
    out.cov_xy += dx * dy;
  }
  out.var_x /= n;
  out.var_y /= n;
  out.cov_xy /= n;
  const double bias = out.mean_x - out.mean_y;
  const double denom = out.var_x + out.var_y + bias * bias;
  if (denom > 0.0) {
    out.ccc = std::clamp(2.0 * out.cov_xy / denom, -1.0, 1.0);
  } else {
    out.ccc = std::equal(pred.begin(), pred.end(), truth.begin()) ? 1.0 : 0.0;
  }
  return out;
}

double huber(double a, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorKind::config, "huber delta must be positive");
  const double abs_a = std::abs(a);
  if (abs_a <= delta) return 0.5 * a * a;
  return delta * abs_a - 0.5 * delta * delta;
}

double AnnealSchedule::weight(std::int64_t iter) const {
  const double progress = static_cast<double>(iter) / static_cast<double>(anneal_iters);
  return std::max(w_floor, w0 * (1.0 - progress));
}

void LossConfig::validate() const {
  if (!(huber_delta > 0.0)) throw Error(ErrorKind::config, "huber_delta must be positive");
  if (!(real_label_target > 0.0 && real_label_target <= 1.0)) {
    throw Error(ErrorKind::config, "real_label_target must lie in (0, 1]");
  }
  const auto& s = feature_match_weight;
  if (!(s.w0 >= s.w_floor && s.w_floor >= 0.0)) {
    throw Error(ErrorKind::config, "feature-matching weights need w0 >= w_floor >= 0");
  }
  if (s.anneal_iters < 1) throw Error(ErrorKind::config, "anneal_iters must be at least 1");
}

RealnessTargets realness_targets(const LossConfig& cfg) {
  return RealnessTargets{cfg.real_label_target, 0.0};
}

Var supervised_loss(Var pred_va, const Tensor& truth_va) {
  const Tensor& pred = pred_va.value();
  if (pred.rank() != 2 || pred.dim(1) != 2) {
    throw Error(ErrorKind::dimension, "supervised_loss: predictions must be [B x 2], got " +
                                          shape_string(pred.shape()));
  }
  if (truth_va.shape() != pred.shape()) {
    throw Error(ErrorKind::dimension, "supervised_loss: labels " + shape_string(truth_va.shape()) +
                                          " do not match predictions " +
                                          shape_string(pred.shape()));
  }
  const std::size_t batch = pred.dim(0);
  if (batch < 2) throw Error(ErrorKind::dimension, "supervised_loss: batch must have B >= 2");

  std::vector<double> x(batch), y(batch);
  std::array<CccBreakdown, 2> parts;
  for (std::size_t col = 0; col < 2; ++col) {
    for (std::size_t i = 0; i < batch; ++i) {
      x[i] = pred[i * 2 + col];
      y[i] = truth_va[i * 2 + col];
    }
    parts[col] = ccc(x, y);
  }
  const double loss = ((1.0 - parts[0].ccc) + (1.0 - parts[1].ccc)) / 2.0;

  Graph& g = pred_va.graph();
  return g.record(Tensor::scalar(loss), pred_va.requires_grad(),
                  [&g, pred_va, truth_va, parts, batch](const Tensor& gy) {
                    const Tensor& p = pred_va.value();
                    Tensor& gp = g.grad_slot(pred_va);
                    const double n = static_cast<double>(batch);
                    for (std::size_t col = 0; col < 2; ++col) {
                      const CccBreakdown& c = parts[col];
                      const double bias = c.mean_x - c.mean_y;
                      const double num = 2.0 * c.cov_xy;
                      const double den = c.var_x + c.var_y + bias * bias;
                      if (!(den > 0.0)) continue;
                      for (std::size_t i = 0; i < batch; ++i) {
                        const double xi = p[i * 2 + col];
                        const double yi = truth_va[i * 2 + col];
                        const double d_num = 2.0 * (yi - c.mean_y) / n;
                        const double d_den = 2.0 * (xi - c.mean_x) / n + 2.0 * bias / n;
                        const double d_ccc = (d_num * den - num * d_den) / (den * den);
                        gp[i * 2 + col] += -0.5 * d_ccc * gy[0];
                      }
                    }
                  });
}

Var d_unsupervised_loss(Var real_logits, Var fake_logits, const RealnessTargets& targets) {
  const Tensor& sr = real_logits.value();
  const Tensor& sf = fake_logits.value();
  require_finite(sr.values(), "d_unsupervised_loss (real)");
  require_finite(sf.values(), "d_unsupervised_loss (fake)");
  const double nr = static_cast<double>(sr.size());
  const double nf = static_cast<double>(sf.size());
  double real_term = 0.0, fake_term = 0.0;
  for (double s : sr.values()) real_term += softplus(s) - targets.real * s;
  for (double s : sf.values()) fake_term += softplus(s) - targets.fake * s;
  const double loss = real_term / nr + fake_term / nf;

  Graph& g = real_logits.graph();
  const bool rg = real_logits.requires_grad() || fake_logits.requires_grad();
  return g.record(Tensor::scalar(loss), rg,
                  [&g, real_logits, fake_logits, targets, nr, nf](const Tensor& gy) {
                    if (real_logits.requires_grad()) {
                      const Tensor& s = real_logits.value();
                      Tensor& gs = g.grad_slot(real_logits);
                      for (std::size_t i = 0; i < s.size(); ++i) {
                        gs[i] += gy[0] * (sigmoid(s[i]) - targets.real) / nr;
                      }
                    }
                    if (fake_logits.requires_grad()) {
                      const Tensor& s = fake_logits.value();
                      Tensor& gs = g.grad_slot(fake_logits);
                      for (std::size_t i = 0; i < s.size(); ++i) {
                        gs[i] += gy[0] * (sigmoid(s[i]) - targets.fake) / nf;
                      }
                    }
                  });
}

Var d_unsupervised_loss(Var real_logits, Var fake_logits, const LossConfig& cfg) {
  return d_unsupervised_loss(real_logits, fake_logits, realness_targets(cfg));
}

Var g_adversarial_loss(Var fake_logits) {
  const Tensor& s = fake_logits.value();
  require_finite(s.values(), "g_adversarial_loss");
  const double n = static_cast<double>(s.size());
  double total = 0.0;
  for (double v : s.values()) total += softplus(-v);
  Graph& g = fake_logits.graph();
  return g.record(Tensor::scalar(total / n), fake_logits.requires_grad(),
                  [&g, fake_logits, n](const Tensor& gy) {
                    const Tensor& sv = fake_logits.value();
                    Tensor& gs = g.grad_slot(fake_logits);
                    for (std::size_t i = 0; i < sv.size(); ++i) {
                      gs[i] += gy[0] * (sigmoid(sv[i]) - 1.0) / n;
                    }
                  });
}

Var feature_matching_loss(const Tensor& real_batch, Var fake_batch, double delta) {
  const Tensor& fake = fake_batch.value();
  if (real_batch.shape() != fake.shape()) {
    throw Error(ErrorKind::dimension, "feature_matching_loss: real batch " +
                                          shape_string(real_batch.shape()) +
                                          " does not match generated batch " +
                                          shape_string(fake.shape()));
  }
  if (!(delta > 0.0)) throw Error(ErrorKind::config, "huber delta must be positive");
  const std::size_t batch = fake.dim(0);
  const std::size_t elems = fake.size() / batch;
  // Per-element difference of batch means, real minus generated.
  std::vector<double> diff(elems, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t e = 0; e < elems; ++e) {
      diff[e] += real_batch[b * elems + e] - fake[b * elems + e];
    }
  }
  double total = 0.0;
  for (double& d : diff) {
    d /= static_cast<double>(batch);
    total += huber(d, delta);
  }
  const double loss = total / static_cast<double>(elems);

  Graph& g = fake_batch.graph();
  return g.record(Tensor::scalar(loss), fake_batch.requires_grad(),
                  [&g, fake_batch, diff = std::move(diff), batch, elems, delta](const Tensor& gy) {
                    Tensor& gf = g.grad_slot(fake_batch);
                    const double scale =
                        -gy[0] / (static_cast<double>(elems) * static_cast<double>(batch));
                    for (std::size_t e = 0; e < elems; ++e) {
                      const double ge = scale * huber_slope(diff[e], delta);
                      for (std::size_t b = 0; b < batch; ++b) gf[b * elems + e] += ge;
                    }
                  });
}

ComposedLosses compose_losses(double sup, double unsup, double g1, double g2, std::int64_t iter,
                              const LossConfig& cfg) {
  ComposedLosses out;
  out.discriminator = sup + unsup;
  out.weight = cfg.feature_match_weight.weight(iter);
  out.generator = g1 + out.weight * g2;
  return out;
}

double rf_accuracy(std::span<const double> logits, const std::vector<bool>& is_real) {
  if (logits.size() != is_real.size()) {
    throw Error(ErrorKind::dimension, "rf_accuracy: flags do not match logits");
  }
  if (logits.empty()) throw Error(ErrorKind::dimension, "rf_accuracy: empty batch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if ((sigmoid(logits[i]) > 0.5) == is_real[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.size());
}

double rf_accuracy(std::span<const double> logits, bool all_real) {
  return rf_accuracy(logits, std::vector<bool>(logits.size(), all_real));
}

}  // namespace vagan
