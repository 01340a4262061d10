#include "vagan/gradcheck_suite.hpp"

#include "vagan/losses.hpp"
#include "vagan/models.hpp"

namespace vagan {

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = uniform(rng, lo, hi);
  return t;
}

// Scalar readout with fixed random weights, so no layer sees a gradient that
// vanishes by symmetry (as a plain sum would after batch norm).
struct Readout {
  std::uint64_t seed;

  Var operator()(Var y) {
    Rng rng(seed);
    return weighted_sum(y, random_tensor(rng, y.shape()));
  }
};

}  // namespace

GradCheckReport check_discriminator_loss(std::size_t size, std::uint64_t seed,
                                         const GradCheckOptions& opts) {
  const DiscriminatorSpec spec = DiscriminatorSpec::tiny(size);
  Rng rng(seed);
  ParameterSet params = init_discriminator(spec, rng);
  const Tensor real = random_tensor(rng, {2, size, size, 3});
  const Tensor fake = random_tensor(rng, {2, size, size, 3});
  const Tensor labels = random_tensor(rng, {2, 2});
  const std::uint64_t drop_seed = derive_seed(seed, 99);
  const RealnessTargets targets{0.9, 0.0};
  auto fn = [&](Graph& g, ParameterSet& p) {
    Rng drop(drop_seed);
    ForwardOptions fo;
    fo.update_running = false;
    Var out = discriminator_forward(concat_batch(g.constant(real), g.constant(fake)), p, spec, fo,
                                    drop);
    Var out_real = slice_batch(out, 0, 2);
    Var sup = supervised_loss(slice_columns(out_real, 0, 2), labels);
    Var unsup = d_unsupervised_loss(slice_columns(out_real, 2, 1),
                                    slice_columns(slice_batch(out, 2, 2), 2, 1), targets);
    return add(sup, unsup);
  };
  return grad_check(fn, params, opts);
}

GradCheckReport check_generator_pipeline(std::size_t size, std::uint64_t seed,
                                         const GradCheckOptions& opts) {
  const ModelSpec spec = ModelSpec::tiny(size);
  Rng rng(seed);
  ParameterSet g_params = init_generator(spec.generator, rng);
  ParameterSet d_params = init_discriminator(spec.discriminator, rng);
  const Tensor z = sample_noise(rng, 2, spec.generator.noise_dim);
  const Tensor real = random_tensor(rng, {2, size, size, 3});
  const std::uint64_t drop_seed = derive_seed(seed, 98);
  auto fn = [&](Graph& g, ParameterSet& p) {
    Rng drop(drop_seed);
    ForwardOptions gen;
    gen.update_running = false;
    Var fake = generator_forward(g.constant(z), p, spec.generator, gen);
    ForwardOptions critic;
    critic.trainable = false;
    critic.update_running = false;
    Var out = discriminator_forward(concat_batch(g.constant(real), fake), d_params,
                                    spec.discriminator, critic, drop);
    Var g1 = g_adversarial_loss(slice_columns(slice_batch(out, 2, 2), 2, 1));
    Var g2 = feature_matching_loss(real, fake, 1.0);
    return add(g1, scale(g2, 0.5));
  };
  return grad_check(fn, g_params, opts);
}

std::vector<SuiteResult> run_gradcheck_suite(const SuiteOptions& opts) {
  const std::size_t s = opts.size;
  GradCheckOptions gc;
  gc.step = opts.step;
  gc.seed = opts.seed;
  std::vector<SuiteResult> results;
  Rng rng(opts.seed);
  auto readout_seed = [&] { return static_cast<std::uint64_t>(rng()); };

  auto layer = [&](const std::string& name, ParameterSet params, auto build) {
    Readout readout{readout_seed()};
    auto fn = [&](Graph& g, ParameterSet& p) { return readout(build(g, p)); };
    results.push_back({name, grad_check(fn, params, gc)});
  };

  {
    ParameterSet p;
    p.add("x", random_tensor(rng, {3, 5}));
    p.add("w", random_tensor(rng, {5, 2}));
    p.add("b", random_tensor(rng, {2}));
    layer("dense", std::move(p), [](Graph& g, ParameterSet& q) {
      return dense(g.parameter(q.at("x")), g.parameter(q.at("w")), g.parameter(q.at("b")));
    });
  }
  {
    ParameterSet p;
    p.add("x", random_tensor(rng, {2, s / 2, s / 2, 3}));
    p.add("k", random_tensor(rng, {5, 5, 3, 4}));
    layer("conv2d", std::move(p), [](Graph& g, ParameterSet& q) {
      return conv2d(g.parameter(q.at("x")), g.parameter(q.at("k")), 2);
    });
  }
  {
    ParameterSet p;
    p.add("x", random_tensor(rng, {2, s / 4, s / 4, 3}));
    p.add("k", random_tensor(rng, {5, 5, 4, 3}));
    layer("deconv2d", std::move(p), [](Graph& g, ParameterSet& q) {
      return deconv2d(g.parameter(q.at("x")), g.parameter(q.at("k")), 2);
    });
  }
  {
    ParameterSet p;
    p.add("x", random_tensor(rng, {2, 3, 3, 4}));
    p.add("b", random_tensor(rng, {4}));
    layer("add_channel_bias", std::move(p), [](Graph& g, ParameterSet& q) {
      return add_channel_bias(g.parameter(q.at("x")), g.parameter(q.at("b")));
    });
  }
  {
    ParameterSet p;
    p.add("x", random_tensor(rng, {3, 4, 4, 3}, -2.0, 2.0));
    p.add("gamma", random_tensor(rng, {3}, 0.5, 1.5));
    p.add("beta", random_tensor(rng, {3}));
    p.add_buffer("mean", Tensor({3}, 0.0));
    p.add_buffer("var", Tensor({3}, 1.0));
    layer("batch_norm", std::move(p), [](Graph& g, ParameterSet& q) {
      BatchNormOptions bn;
      bn.update_running = false;
      return batch_norm(g.parameter(q.at("x")), g.parameter(q.at("gamma")),
                        g.parameter(q.at("beta")), q.buffer("mean"), q.buffer("var"), bn);
    });
  }
  for (auto [kind, name] : {std::pair{Activation::relu, "relu"}, std::pair{Activation::lrelu, "lrelu"},
                            std::pair{Activation::tanh, "tanh"},
                            std::pair{Activation::sigmoid, "sigmoid"}}) {
    ParameterSet p;
    p.add("x", random_tensor(rng, {4, 6}, -3.0, 3.0));
    layer(name, std::move(p), [kind = kind](Graph& g, ParameterSet& q) {
      return activation(g.parameter(q.at("x")), kind, 0.2);
    });
  }
  {
    ParameterSet p;
    p.add("x", random_tensor(rng, {4, 6}));
    const std::uint64_t mask_seed = readout_seed();
    layer("dropout", std::move(p), [mask_seed](Graph& g, ParameterSet& q) {
      Rng mask(mask_seed);
      return dropout(g.parameter(q.at("x")), 0.5, Mode::train, mask);
    });
  }
  {
    ParameterSet p;
    p.add("x", random_tensor(rng, {2, 3, 3, 4}));
    layer("global_avg_pool", std::move(p), [](Graph& g, ParameterSet& q) {
      return global_avg_pool(g.parameter(q.at("x")));
    });
  }
  {
    ParameterSet p;
    p.add("a", random_tensor(rng, {2, 3, 3, 2}));
    p.add("b", random_tensor(rng, {1, 3, 3, 2}));
    layer("concat_batch", std::move(p), [](Graph& g, ParameterSet& q) {
      return concat_batch(g.parameter(q.at("a")), g.parameter(q.at("b")));
    });
  }
  {
    ParameterSet p;
    p.add("x", random_tensor(rng, {4, 2, 3}));
    layer("slice_batch", std::move(p), [](Graph& g, ParameterSet& q) {
      return slice_batch(g.parameter(q.at("x")), 1, 2);
    });
  }

  auto scalar_check = [&](const std::string& name, ParameterSet params, auto build) {
    auto fn = [&](Graph& g, ParameterSet& p) { return build(g, p); };
    results.push_back({name, grad_check(fn, params, gc)});
  };
  {
    ParameterSet p;
    p.add("pred", random_tensor(rng, {6, 2}));
    const Tensor truth = random_tensor(rng, {6, 2});
    scalar_check("supervised_loss", std::move(p), [truth](Graph& g, ParameterSet& q) {
      return supervised_loss(g.parameter(q.at("pred")), truth);
    });
  }
  {
    ParameterSet p;
    p.add("real", random_tensor(rng, {5, 1}, -4.0, 4.0));
    p.add("fake", random_tensor(rng, {5, 1}, -4.0, 4.0));
    scalar_check("d_unsupervised_loss", std::move(p), [](Graph& g, ParameterSet& q) {
      return d_unsupervised_loss(g.parameter(q.at("real")), g.parameter(q.at("fake")),
                                 RealnessTargets{0.9, 0.0});
    });
  }
  {
    ParameterSet p;
    p.add("fake", random_tensor(rng, {5, 1}, -4.0, 4.0));
    scalar_check("g_adversarial_loss", std::move(p), [](Graph& g, ParameterSet& q) {
      return g_adversarial_loss(g.parameter(q.at("fake")));
    });
  }
  {
    ParameterSet p;
    p.add("fake", random_tensor(rng, {3, 4, 4, 3}, -2.0, 2.0));
    const Tensor real = random_tensor(rng, {3, 4, 4, 3}, -2.0, 2.0);
    scalar_check("feature_matching_loss", std::move(p), [real](Graph& g, ParameterSet& q) {
      return feature_matching_loss(real, g.parameter(q.at("fake")), 0.5);
    });
  }

  GradCheckOptions net = gc;
  net.max_entries_per_parameter = opts.network_entries;
  results.push_back({"discriminator_loss", check_discriminator_loss(s, opts.seed, net)});
  results.push_back({"generator_pipeline", check_generator_pipeline(s, opts.seed, net)});
  return results;
}

}  // namespace vagan
