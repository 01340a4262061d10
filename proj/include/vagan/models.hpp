#pragma once

// Generator and discriminator of the regression GAN, built on the autodiff
// layers. Parameters live in one ParameterSet per network; batch-norm
// running statistics are its buffers.

#include <cstddef>
#include <string>
#include <vector>

#include "vagan/autodiff.hpp"
#include "vagan/parameters.hpp"
#include "vagan/random.hpp"

namespace vagan {

struct GeneratorSpec {
  std::size_t noise_dim = 100;
  std::size_t base_spatial = 4;
  std::size_t base_channels = 512;
  std::vector<std::size_t> deconv_channels{256, 128, 64, 3};
  std::size_t kernel = 5;
  std::size_t stride = 2;

  std::size_t output_size() const;
  void validate() const;

  static GeneratorSpec paper() { return {}; }
  // Reduced widths on the paper's 64x64 geometry.
  static GeneratorSpec desk();
  // Small square output (16 or 32) for gradient checks and fast tests.
  static GeneratorSpec tiny(std::size_t output_size = 16);
};

struct DiscriminatorSpec {
  std::size_t input_size = 64;
  std::vector<std::size_t> conv_channels{64, 128, 256, 512};
  std::size_t kernel = 5;
  std::size_t stride = 2;
  double lrelu_slope = 0.2;
  double dropout_keep = 0.5;
  std::size_t head_dim = 3;

  // Spatial size after each conv layer.
  std::vector<std::size_t> spatial_progression() const;
  void validate() const;

  static DiscriminatorSpec paper() { return {}; }
  static DiscriminatorSpec desk();
  static DiscriminatorSpec tiny(std::size_t input_size = 16);
};

struct ModelSpec {
  GeneratorSpec generator;
  DiscriminatorSpec discriminator;

  void validate() const;

  static ModelSpec paper() { return {GeneratorSpec::paper(), DiscriminatorSpec::paper()}; }
  static ModelSpec desk() { return {GeneratorSpec::desk(), DiscriminatorSpec::desk()}; }
  static ModelSpec tiny(std::size_t size = 16) {
    return {GeneratorSpec::tiny(size), DiscriminatorSpec::tiny(size)};
  }
};

// Weights ~ N(0, 0.02); biases and BN shifts 0; BN scales 1; running mean 0
// and variance 1.
ParameterSet init_generator(const GeneratorSpec& spec, Rng& rng);
ParameterSet init_discriminator(const DiscriminatorSpec& spec, Rng& rng);

struct ForwardOptions {
  Mode mode = Mode::train;
  // false binds parameters as constants so no gradient reaches them.
  bool trainable = true;
  // Train mode only: fold batch statistics into the running buffers.
  bool update_running = true;
};

// z [B x noise_dim] -> images [B x S x S x 3] in (-1, 1).
// dense -> reshape -> relu, then deconv layers with BN + relu except the
// last, which is deconv + bias + tanh.
Var generator_forward(Var z, ParameterSet& params, const GeneratorSpec& spec,
                      const ForwardOptions& opts);

// images [B x S x S x 3] -> [B x 3] = (valence, arousal, realness logit).
// conv1 + lrelu + dropout, then conv + BN + lrelu + dropout per layer,
// global average pooling and a dense head without activation.
Var discriminator_forward(Var images, ParameterSet& params, const DiscriminatorSpec& spec,
                          const ForwardOptions& opts, Rng& dropout_rng);

struct LayerCount {
  std::string layer;
  std::size_t count = 0;
};

struct ParameterCensus {
  std::vector<LayerCount> layers;
  std::size_t total = 0;
};

ParameterCensus parameter_census(const GeneratorSpec& spec);
ParameterCensus parameter_census(const DiscriminatorSpec& spec);

// U[-1, 1] noise, row-major draw order.
Tensor sample_noise(Rng& rng, std::size_t batch, std::size_t dim);

}  // namespace vagan
