#pragma once

// Scalar objectives of the regression GAN and the metrics logged around them.

#include <cstdint>
#include <span>
#include <vector>

#include "vagan/autodiff.hpp"

namespace vagan {

// Concordance correlation coefficient with population (1/N) moments.
struct CccBreakdown {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  double cov_xy = 0.0;
  double ccc = 0.0;
};

// Requires equal lengths >= 2. When the denominator vanishes (both sequences
// constant with equal means) ccc is 1 for identical sequences, else 0.
CccBreakdown ccc(std::span<const double> pred, std::span<const double> truth);

double huber(double a, double delta);

// Linear decay of the feature-matching weight from w0 to a floor.
struct AnnealSchedule {
  double w0 = 1.0;
  double w_floor = 0.05;
  std::int64_t anneal_iters = 10000;

  double weight(std::int64_t iter) const;
};

struct LossConfig {
  double huber_delta = 1.0;
  // One-sided smoothing: target for real samples; fakes always target 0.
  double real_label_target = 0.9;
  AnnealSchedule feature_match_weight;

  void validate() const;
};

// Binary targets fed to the real/fake cross-entropy.
struct RealnessTargets {
  double real = 1.0;
  double fake = 0.0;
};

RealnessTargets realness_targets(const LossConfig& cfg);

// Mean over the two columns (valence, arousal) of 1 - ccc, per minibatch.
// pred is a [B x 2] node, truth a [B x 2] tensor, B >= 2.
Var supervised_loss(Var pred_va, const Tensor& truth_va);

// Cross-entropy on realness logits s (p_real = sigmoid(s)), evaluated in
// logit space: mean over real of BCE(s, targets.real) plus mean over fake of
// BCE(s, targets.fake).
Var d_unsupervised_loss(Var real_logits, Var fake_logits, const RealnessTargets& targets);
Var d_unsupervised_loss(Var real_logits, Var fake_logits, const LossConfig& cfg);

// -mean log sigmoid(s) over generated samples.
Var g_adversarial_loss(Var fake_logits);

// Elementwise Huber between the batch-mean real image and the batch-mean
// generated image, averaged over elements.
Var feature_matching_loss(const Tensor& real_batch, Var fake_batch, double delta);

struct ComposedLosses {
  double discriminator = 0.0;
  double generator = 0.0;
  double weight = 0.0;
};

// L_D = sup + unsup; L_G = g1 + w(iter) * g2.
ComposedLosses compose_losses(double sup, double unsup, double g1, double g2, std::int64_t iter,
                              const LossConfig& cfg);

// Fraction of samples where (sigmoid(s) > 0.5) matches the flag.
double rf_accuracy(std::span<const double> logits, const std::vector<bool>& is_real);
double rf_accuracy(std::span<const double> logits, bool all_real);

}  // namespace vagan
