#include "vagan/models.hpp"

#include "vagan/error.hpp"

namespace vagan {

namespace {

std::string layer(const char* kind, std::size_t index) { return kind + std::to_string(index); }

Tensor gaussian(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = normal(rng, 0.0, 0.02);
  return t;
}

void add_batch_norm(ParameterSet& p, const std::string& name, std::size_t channels) {
  p.add(name + ".gamma", Tensor({channels}, 1.0));
  p.add(name + ".beta", Tensor({channels}, 0.0));
  p.add_buffer(name + ".mean", Tensor({channels}, 0.0));
  p.add_buffer(name + ".var", Tensor({channels}, 1.0));
}

Var param_node(Graph& g, ParameterSet& p, const std::string& name, const ForwardOptions& opts) {
  return g.parameter(p.at(name), opts.trainable);
}

Var apply_batch_norm(Var x, ParameterSet& p, const std::string& name, const ForwardOptions& opts) {
  Graph& g = x.graph();
  BatchNormOptions bn;
  bn.mode = opts.mode;
  bn.update_running = opts.update_running;
  return batch_norm(x, param_node(g, p, name + ".gamma", opts), param_node(g, p, name + ".beta", opts),
                    p.buffer(name + ".mean"), p.buffer(name + ".var"), bn);
}

}  // namespace

std::size_t GeneratorSpec::output_size() const {
  std::size_t size = base_spatial;
  for (std::size_t i = 0; i < deconv_channels.size(); ++i) size *= stride;
  return size;
}

void GeneratorSpec::validate() const {
  if (noise_dim == 0 || base_spatial == 0 || base_channels == 0) {
    throw Error(ErrorKind::config, "generator dimensions must be positive");
  }
  if (kernel == 0 || stride == 0) throw Error(ErrorKind::config, "generator kernel/stride must be positive");
  if (deconv_channels.empty() || deconv_channels.back() != 3) {
    throw Error(ErrorKind::config, "generator must end in a 3-channel layer");
  }
  for (std::size_t c : deconv_channels) {
    if (c == 0) throw Error(ErrorKind::config, "generator channel counts must be positive");
  }
}

GeneratorSpec GeneratorSpec::desk() {
  GeneratorSpec s;
  s.base_channels = 128;
  s.deconv_channels = {64, 32, 16, 3};
  return s;
}

GeneratorSpec GeneratorSpec::tiny(std::size_t output_size) {
  GeneratorSpec s;
  s.noise_dim = 8;
  s.base_spatial = 2;
  s.base_channels = 8;
  if (output_size == 16) {
    s.deconv_channels = {6, 4, 3};
  } else if (output_size == 32) {
    s.deconv_channels = {8, 6, 4, 3};
  } else {
    throw Error(ErrorKind::config, "tiny generator supports output sizes 16 and 32");
  }
  return s;
}

std::vector<std::size_t> DiscriminatorSpec::spatial_progression() const {
  std::vector<std::size_t> sizes;
  std::size_t size = input_size;
  for (std::size_t i = 0; i < conv_channels.size(); ++i) {
    size = (size + stride - 1) / stride;
    sizes.push_back(size);
  }
  return sizes;
}

void DiscriminatorSpec::validate() const {
  if (input_size == 0 || kernel == 0 || stride == 0 || head_dim == 0) {
    throw Error(ErrorKind::config, "discriminator dimensions must be positive");
  }
  if (conv_channels.empty()) throw Error(ErrorKind::config, "discriminator needs a conv layer");
  for (std::size_t c : conv_channels) {
    if (c == 0) throw Error(ErrorKind::config, "discriminator channel counts must be positive");
  }
  if (!(dropout_keep > 0.0 && dropout_keep <= 1.0)) {
    throw Error(ErrorKind::config, "dropout keep probability must lie in (0, 1]");
  }
  if (head_dim != 3) throw Error(ErrorKind::config, "discriminator head must have 3 outputs");
}

DiscriminatorSpec DiscriminatorSpec::desk() {
  DiscriminatorSpec s;
  s.conv_channels = {16, 32, 64, 128};
  return s;
}

DiscriminatorSpec DiscriminatorSpec::tiny(std::size_t input_size) {
  DiscriminatorSpec s;
  s.input_size = input_size;
  s.conv_channels = {4, 6, 8};
  return s;
}

void ModelSpec::validate() const {
  generator.validate();
  discriminator.validate();
  if (generator.output_size() != discriminator.input_size) {
    throw Error(ErrorKind::config, "generator output size " +
                                       std::to_string(generator.output_size()) +
                                       " does not match discriminator input size " +
                                       std::to_string(discriminator.input_size));
  }
}

ParameterSet init_generator(const GeneratorSpec& spec, Rng& rng) {
  spec.validate();
  ParameterSet p;
  const std::size_t base = spec.base_spatial * spec.base_spatial * spec.base_channels;
  p.add("dense.w", gaussian(rng, {spec.noise_dim, base}));
  p.add("dense.b", Tensor({base}, 0.0));
  std::size_t in_c = spec.base_channels;
  const std::size_t n = spec.deconv_channels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t out_c = spec.deconv_channels[i];
    p.add(layer("deconv", i + 1) + ".w", gaussian(rng, {spec.kernel, spec.kernel, out_c, in_c}));
    if (i + 1 < n) {
      add_batch_norm(p, layer("bn", i + 1), out_c);
    } else {
      p.add(layer("deconv", i + 1) + ".b", Tensor({out_c}, 0.0));
    }
    in_c = out_c;
  }
  return p;
}

ParameterSet init_discriminator(const DiscriminatorSpec& spec, Rng& rng) {
  spec.validate();
  ParameterSet p;
  std::size_t in_c = 3;
  for (std::size_t i = 0; i < spec.conv_channels.size(); ++i) {
    const std::size_t out_c = spec.conv_channels[i];
    p.add(layer("conv", i + 1) + ".w", gaussian(rng, {spec.kernel, spec.kernel, in_c, out_c}));
    if (i == 0) {
      p.add("conv1.b", Tensor({out_c}, 0.0));
    } else {
      add_batch_norm(p, layer("bn", i + 1), out_c);
    }
    in_c = out_c;
  }
  p.add("head.w", gaussian(rng, {in_c, spec.head_dim}));
  p.add("head.b", Tensor({spec.head_dim}, 0.0));
  return p;
}

Var generator_forward(Var z, ParameterSet& params, const GeneratorSpec& spec,
                      const ForwardOptions& opts) {
  Graph& g = z.graph();
  const Shape& zs = z.shape();
  if (zs.size() != 2 || zs[1] != spec.noise_dim) {
    throw Error(ErrorKind::dimension, "generator: noise must be [B x " +
                                          std::to_string(spec.noise_dim) + "], got " +
                                          shape_string(zs));
  }
  const std::size_t batch = zs[0];
  Var h = dense(z, param_node(g, params, "dense.w", opts), param_node(g, params, "dense.b", opts));
  h = reshape(h, {batch, spec.base_spatial, spec.base_spatial, spec.base_channels});
  h = activation(h, Activation::relu);
  const std::size_t n = spec.deconv_channels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string name = layer("deconv", i + 1);
    h = deconv2d(h, param_node(g, params, name + ".w", opts), spec.stride);
    if (i + 1 < n) {
      h = apply_batch_norm(h, params, layer("bn", i + 1), opts);
      h = activation(h, Activation::relu);
    } else {
      h = add_channel_bias(h, param_node(g, params, name + ".b", opts));
      h = activation(h, Activation::tanh);
    }
  }
  return h;
}

Var discriminator_forward(Var images, ParameterSet& params, const DiscriminatorSpec& spec,
                          const ForwardOptions& opts, Rng& dropout_rng) {
  Graph& g = images.graph();
  const Shape& xs = images.shape();
  if (xs.size() != 4 || xs[1] != spec.input_size || xs[2] != spec.input_size || xs[3] != 3) {
    throw Error(ErrorKind::dimension, "discriminator: expected [B x " +
                                          std::to_string(spec.input_size) + " x " +
                                          std::to_string(spec.input_size) + " x 3], got " +
                                          shape_string(xs));
  }
  Var h = images;
  for (std::size_t i = 0; i < spec.conv_channels.size(); ++i) {
    const std::string name = layer("conv", i + 1);
    h = conv2d(h, param_node(g, params, name + ".w", opts), spec.stride);
    if (i == 0) {
      h = add_channel_bias(h, param_node(g, params, "conv1.b", opts));
    } else {
      h = apply_batch_norm(h, params, layer("bn", i + 1), opts);
    }
    h = activation(h, Activation::lrelu, spec.lrelu_slope);
    h = dropout(h, spec.dropout_keep, opts.mode, dropout_rng);
  }
  h = global_avg_pool(h);
  return dense(h, param_node(g, params, "head.w", opts), param_node(g, params, "head.b", opts));
}

ParameterCensus parameter_census(const GeneratorSpec& spec) {
  spec.validate();
  ParameterCensus c;
  const std::size_t base = spec.base_spatial * spec.base_spatial * spec.base_channels;
  c.layers.push_back({"dense", spec.noise_dim * base + base});
  std::size_t in_c = spec.base_channels;
  const std::size_t n = spec.deconv_channels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t out_c = spec.deconv_channels[i];
    const std::size_t weights = spec.kernel * spec.kernel * in_c * out_c;
    c.layers.push_back({layer("deconv", i + 1), i + 1 < n ? weights : weights + out_c});
    if (i + 1 < n) c.layers.push_back({layer("bn", i + 1), 2 * out_c});
    in_c = out_c;
  }
  for (const auto& l : c.layers) c.total += l.count;
  return c;
}

ParameterCensus parameter_census(const DiscriminatorSpec& spec) {
  spec.validate();
  ParameterCensus c;
  std::size_t in_c = 3;
  for (std::size_t i = 0; i < spec.conv_channels.size(); ++i) {
    const std::size_t out_c = spec.conv_channels[i];
    const std::size_t weights = spec.kernel * spec.kernel * in_c * out_c;
    c.layers.push_back({layer("conv", i + 1), i == 0 ? weights + out_c : weights});
    if (i > 0) c.layers.push_back({layer("bn", i + 1), 2 * out_c});
    in_c = out_c;
  }
  c.layers.push_back({"head", in_c * spec.head_dim + spec.head_dim});
  for (const auto& l : c.layers) c.total += l.count;
  return c;
}

Tensor sample_noise(Rng& rng, std::size_t batch, std::size_t dim) {
  Tensor z({batch, dim});
  for (double& v : z.values()) v = uniform(rng, -1.0, 1.0);
  return z;
}

}  // namespace vagan
