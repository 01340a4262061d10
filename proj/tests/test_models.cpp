#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "test_util.hpp"
#include "vagan/error.hpp"
#include "vagan/gradcheck_suite.hpp"
#include "vagan/models.hpp"

namespace vagan {
namespace {

using testing::random_tensor;

// Spatial sizes of the rank-4 nodes of a graph, in creation order, deduplicated.
std::vector<std::size_t> spatial_sizes(const Graph& g) {
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Tensor& t = g.value_of(i);
    if (t.rank() != 4 || t.dim(0) != 2) continue;
    if (sizes.empty() || sizes.back() != t.dim(1)) sizes.push_back(t.dim(1));
  }
  return sizes;
}

TEST(Generator, PaperShapesAndRange) {
  const auto spec = GeneratorSpec::paper();
  EXPECT_EQ(spec.output_size(), 64u);
  Rng rng(1);
  ParameterSet p = init_generator(spec, rng);
  Graph g;
  Var z = g.constant(sample_noise(rng, 2, 100));
  Var x = generator_forward(z, p, spec, {});
  EXPECT_EQ(x.shape(), (Shape{2, 64, 64, 3}));
  for (double v : x.value().values()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_EQ(spatial_sizes(g), (std::vector<std::size_t>{4, 8, 16, 32, 64}));
}

TEST(Generator, RangeHoldsForLargeWeights) {
  const auto spec = GeneratorSpec::tiny(16);
  Rng rng(2);
  ParameterSet p = init_generator(spec, rng);
  for (auto& [name, param] : p.parameters()) {
    for (double& v : param.value.values()) v *= 500.0;
  }
  Graph g;
  Var x = generator_forward(g.constant(sample_noise(rng, 4, spec.noise_dim)), p, spec,
                            {Mode::infer, false, false});
  for (double v : x.value().values()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
    EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Generator, DeterministicForFixedSeed) {
  auto run = [] {
    const auto spec = GeneratorSpec::desk();
    Rng rng(3);
    ParameterSet p = init_generator(spec, rng);
    Graph g;
    return generator_forward(g.constant(sample_noise(rng, 3, spec.noise_dim)), p, spec, {})
        .value();
  };
  EXPECT_EQ(run(), run());
}

TEST(Generator, NoiseShapeMismatch) {
  const auto spec = GeneratorSpec::tiny(16);
  Rng rng(4);
  ParameterSet p = init_generator(spec, rng);
  Graph g;
  EXPECT_THROW(generator_forward(g.constant(Tensor({2, spec.noise_dim + 1})), p, spec, {}), Error);
}

TEST(Noise, UniformOnUnitInterval) {
  Rng rng(5);
  const Tensor z = sample_noise(rng, 200, 100);
  double lo = 1.0, hi = -1.0, mean = 0.0;
  for (double v : z.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v / static_cast<double>(z.size());
  }
  EXPECT_GE(lo, -1.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_LT(lo, -0.99);
  EXPECT_GT(hi, 0.99);
  EXPECT_NEAR(mean, 0.0, 0.02);
}

TEST(Discriminator, PaperShapes) {
  const auto spec = DiscriminatorSpec::paper();
  EXPECT_EQ(spec.spatial_progression(), (std::vector<std::size_t>{32, 16, 8, 4}));
  Rng rng(6);
  ParameterSet p = init_discriminator(spec, rng);
  Graph g;
  Rng drop(1);
  Var y = discriminator_forward(g.constant(random_tensor({2, 64, 64, 3}, rng)), p, spec, {}, drop);
  EXPECT_EQ(y.shape(), (Shape{2, 3}));
  EXPECT_EQ(spatial_sizes(g), (std::vector<std::size_t>{64, 32, 16, 8, 4}));
}

TEST(Discriminator, InferModeIsDeterministic) {
  const auto spec = DiscriminatorSpec::desk();
  Rng rng(7);
  ParameterSet p = init_discriminator(spec, rng);
  const Tensor x = random_tensor({3, 64, 64, 3}, rng);
  const ForwardOptions infer{Mode::infer, false, false};
  Rng d1(1), d2(99);
  Graph g1, g2;
  const Tensor a = discriminator_forward(g1.constant(x), p, spec, infer, d1).value();
  const Tensor b = discriminator_forward(g2.constant(x), p, spec, infer, d2).value();
  EXPECT_EQ(a, b);

  // Train mode draws dropout masks.
  Graph g3;
  const ParameterSet before = p;
  const Tensor c = discriminator_forward(g3.constant(x), p, spec, {Mode::train, true, false}, d1).value();
  EXPECT_NE(a, c);
  EXPECT_EQ(p, before);
}

TEST(Discriminator, WrongInputSize) {
  const auto spec = DiscriminatorSpec::tiny(16);
  Rng rng(8);
  ParameterSet p = init_discriminator(spec, rng);
  Graph g;
  Rng drop(1);
  try {
    discriminator_forward(g.constant(Tensor({2, 32, 32, 3})), p, spec, {}, drop);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(Discriminator, HeadsAreUnbounded) {
  const auto spec = DiscriminatorSpec::tiny(16);
  Rng rng(9);
  ParameterSet p = init_discriminator(spec, rng);
  p.at("head.b").value = Tensor({3}, std::vector<double>{4.0, -7.5, 30.0});
  Graph g;
  Rng drop(1);
  Var y = discriminator_forward(g.constant(random_tensor({2, 16, 16, 3}, rng)), p, spec,
                                {Mode::infer, false, false}, drop);
  for (std::size_t b = 0; b < 2; ++b) {
    EXPECT_GT(y.value()[b * 3 + 0], 1.0);
    EXPECT_LT(y.value()[b * 3 + 1], -1.0);
    EXPECT_GT(y.value()[b * 3 + 2], 1.0);
  }
}

TEST(Census, PaperCounts) {
  const auto g = parameter_census(GeneratorSpec::paper());
  EXPECT_EQ(g.layers.front().layer, "dense");
  EXPECT_EQ(g.layers.front().count, 827392u);
  const auto d = parameter_census(DiscriminatorSpec::paper());
  EXPECT_EQ(d.layers.front().layer, "conv1");
  EXPECT_EQ(d.layers.front().count, 4864u);
  for (const auto* c : {&g, &d}) {
    std::size_t sum = 0;
    for (const auto& l : c->layers) sum += l.count;
    EXPECT_EQ(c->total, sum);
  }
}

TEST(Census, MatchesInitializedParameters) {
  Rng rng(10);
  for (const auto& spec : {ModelSpec::paper(), ModelSpec::desk(), ModelSpec::tiny(16),
                           ModelSpec::tiny(32)}) {
    EXPECT_EQ(parameter_census(spec.generator).total,
              init_generator(spec.generator, rng).parameter_count());
    EXPECT_EQ(parameter_census(spec.discriminator).total,
              init_discriminator(spec.discriminator, rng).parameter_count());
  }
}

TEST(Init, GaussianWeightsAndNeutralNorms) {
  Rng rng(11);
  const ParameterSet p = init_generator(GeneratorSpec::paper(), rng);
  const Tensor& w = p.at("dense.w").value;
  double mean = 0.0, sq = 0.0;
  for (double v : w.values()) mean += v / static_cast<double>(w.size());
  for (double v : w.values()) sq += (v - mean) * (v - mean) / static_cast<double>(w.size());
  EXPECT_NEAR(mean, 0.0, 1e-3);
  EXPECT_NEAR(std::sqrt(sq), 0.02, 2e-4);
  for (double v : p.at("bn1.gamma").value.values()) EXPECT_EQ(v, 1.0);
  for (double v : p.at("bn1.beta").value.values()) EXPECT_EQ(v, 0.0);
  for (double v : p.buffer("bn1.var").values()) EXPECT_EQ(v, 1.0);
}

TEST(ReducedConfigs, ShapeArithmeticFollowsSpec) {
  for (std::size_t size : {16u, 32u}) {
    const auto spec = ModelSpec::tiny(size);
    EXPECT_NO_THROW(spec.validate());
    EXPECT_EQ(spec.generator.output_size(), size);
    EXPECT_EQ(spec.generator.output_size(),
              spec.generator.base_spatial << spec.generator.deconv_channels.size());
    Rng rng(size);
    ParameterSet gp = init_generator(spec.generator, rng);
    ParameterSet dp = init_discriminator(spec.discriminator, rng);
    Graph g;
    Var x = generator_forward(g.constant(sample_noise(rng, 2, spec.generator.noise_dim)), gp,
                              spec.generator, {});
    EXPECT_EQ(x.shape(), (Shape{2, size, size, 3}));
    Rng drop(1);
    Var y = discriminator_forward(x, dp, spec.discriminator, {}, drop);
    EXPECT_EQ(y.shape(), (Shape{2, 3}));
    auto prog = spec.discriminator.spatial_progression();
    for (std::size_t i = 0; i < prog.size(); ++i) {
      EXPECT_EQ(prog[i], (size + (1u << (i + 1)) - 1) >> (i + 1));
    }
  }
  ModelSpec mismatched = ModelSpec::tiny(16);
  mismatched.discriminator.input_size = 32;
  EXPECT_THROW(mismatched.validate(), Error);
  EXPECT_THROW(GeneratorSpec::tiny(24), Error);
}

TEST(SpecValidation, Rejections) {
  DiscriminatorSpec d;
  d.head_dim = 2;
  EXPECT_THROW(d.validate(), Error);
  GeneratorSpec g;
  g.deconv_channels = {256, 128, 4};
  EXPECT_THROW(g.validate(), Error);
}

TEST(NetworkGradients, BothNetworksPassFiniteDifferences) {
  GradCheckOptions opts;
  opts.step = 1e-5;
  const auto d = check_discriminator_loss(16, 3, opts);
  const auto g = check_generator_pipeline(16, 3, opts);
  EXPECT_LT(d.max_rel_error(), 1e-4);
  EXPECT_LT(g.max_rel_error(), 1e-4);
  EXPECT_FALSE(d.entries.empty());
  EXPECT_FALSE(g.entries.empty());
  for (const auto& e : d.entries) EXPECT_GT(e.checked, 0u) << e.name;
}

}  // namespace
}  // namespace vagan
