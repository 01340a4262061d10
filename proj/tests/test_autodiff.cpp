#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <string>

#include "test_util.hpp"
#include "vagan/autodiff.hpp"
#include "vagan/error.hpp"
#include "vagan/gradcheck.hpp"
#include "vagan/gradcheck_suite.hpp"
#include "vagan/kernels_reference.hpp"
#include "vagan/parameters.hpp"

namespace vagan {
namespace {

using testing::random_tensor;

constexpr double kFdTolerance = 1e-4;
constexpr int kSeeds = 20;

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::usage;
}

// Finite-difference check of layer(inputs...) read out through a random
// weighted sum, so that gradients are never trivially zero.
GradCheckReport check_layer(ParameterSet& params, const Shape& out_shape, std::uint64_t seed,
                            const std::function<Var(Graph&, ParameterSet&)>& layer,
                            double step = 1e-5) {
  Rng rng(derive_seed(seed, 99));
  const Tensor readout = random_tensor(out_shape, rng);
  GradCheckOptions opts;
  opts.step = step;
  return grad_check(
      [&](Graph& g, ParameterSet& p) { return weighted_sum(layer(g, p), readout); }, params,
      opts);
}

Tensor tensor(Shape shape, std::vector<double> values) {
  return Tensor(std::move(shape), std::move(values));
}

// --- dense ---------------------------------------------------------------------

TEST(Dense, IdentityAndBiasShift) {
  Graph g;
  Var x = g.constant(tensor({1, 2}, {1, 2}));
  Var w = g.constant(tensor({2, 2}, {1, 0, 0, 1}));
  EXPECT_EQ(dense(x, w, g.constant(tensor({2}, {0, 0}))).value().values()[0], 1.0);
  Var y = dense(x, w, g.constant(tensor({2}, {1, 1})));
  EXPECT_EQ(y.value(), tensor({1, 2}, {2, 3}));
}

TEST(Dense, ShapeMismatchNamesAxis) {
  Graph g;
  Var x = g.constant(Tensor({3, 4}));
  Var w = g.constant(Tensor({5, 2}));
  Var b = g.constant(Tensor({2}));
  try {
    dense(x, w, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
    EXPECT_NE(std::string(e.what()).find("axis"), std::string::npos) << e.what();
  }
}

TEST(Dense, SumGradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    ParameterSet p;
    p.add("x", random_tensor({3, 5}, rng));
    p.add("w", random_tensor({5, 2}, rng));
    p.add("b", random_tensor({2}, rng));
    GradCheckOptions opts;
    opts.step = 1e-5;
    const auto report = grad_check(
        [](Graph& g, ParameterSet& q) {
          return sum(dense(g.parameter(q.at("x")), g.parameter(q.at("w")),
                           g.parameter(q.at("b"))));
        },
        p, opts);
    EXPECT_LT(report.max_rel_error(), kFdTolerance) << "seed " << seed;
  }
}

// --- conv2d / deconv2d ---------------------------------------------------------

TEST(Conv2d, DeltaKernelPicksStridedInputs) {
  Graph g;
  Tensor x({1, 4, 4, 1});
  for (std::size_t i = 0; i < 16; ++i) x[i] = static_cast<double>(i + 1);
  Tensor k({5, 5, 1, 1});
  k[2 * 5 + 2] = 1.0;
  Var y = conv2d(g.constant(x), g.constant(k), 2);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 2, 1}));
  // Input (r, c) holds 4r + c + 1.
  EXPECT_EQ(y.value()[0], x[1 * 4 + 1]);
  EXPECT_EQ(y.value()[1], x[1 * 4 + 3]);
  EXPECT_EQ(y.value()[2], x[3 * 4 + 1]);
  EXPECT_EQ(y.value()[3], x[3 * 4 + 3]);
}

TEST(Conv2d, ZeroInputGivesZeroOutput) {
  Graph g;
  Rng rng(1);
  Var y = conv2d(g.constant(Tensor({2, 6, 6, 3})), g.constant(random_tensor({5, 5, 3, 4}, rng)), 2);
  EXPECT_EQ(y.shape(), (Shape{2, 3, 3, 4}));
  for (double v : y.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, MatchesReferenceKernel) {
  Rng rng(2);
  Graph g;
  const Tensor x = random_tensor({2, 7, 5, 3}, rng);
  const Tensor k = random_tensor({3, 3, 3, 4}, rng);
  Var y = conv2d(g.constant(x), g.constant(k), 2);
  const auto geo = kernels::ConvGeometry::same(2, 7, 5, 3, 4, 3, 2);
  std::vector<double> expected(geo.output_elements());
  kernels::reference::conv2d_forward(geo, x.values(), k.values(), expected);
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(y.value()[i], expected[i], 1e-12);
}

TEST(Conv2d, Errors) {
  Graph g;
  Var x = g.constant(Tensor({1, 4, 4, 2}));
  EXPECT_EQ(kind_of([&] { conv2d(x, g.constant(Tensor({3, 3, 2, 1})), 0); }), ErrorKind::dimension);
  EXPECT_EQ(kind_of([&] { conv2d(x, g.constant(Tensor({3, 3, 3, 1})), 1); }), ErrorKind::dimension);
}

TEST(Conv2d, GradientsMatchFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    ParameterSet p;
    p.add("x", random_tensor({2, 8, 8, 3}, rng));
    p.add("k", random_tensor({5, 5, 3, 4}, rng));
    const auto report = check_layer(p, {2, 4, 4, 4}, seed, [](Graph& g, ParameterSet& q) {
      return conv2d(g.parameter(q.at("x")), g.parameter(q.at("k")), 2);
    });
    EXPECT_LT(report.max_rel_error(), kFdTolerance) << "seed " << seed;
  }
}

TEST(Deconv2d, DeltaKernelFollowsConvAdjoint) {
  Graph g;
  Tensor k({5, 5, 1, 1});
  k[2 * 5 + 2] = 1.0;
  Var y = deconv2d(g.constant(tensor({1, 1, 1, 1}, {0.7})), g.constant(k), 2);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 2, 1}));
  // conv2d of a 2x2 map with this kernel reads element (1, 1), so its
  // adjoint writes there.
  EXPECT_EQ(y.value(), tensor({1, 2, 2, 1}, {0, 0, 0, 0.7}));
}

TEST(Deconv2d, ZeroInputGivesZeroOutput) {
  Graph g;
  Rng rng(4);
  Var y = deconv2d(g.constant(Tensor({2, 3, 3, 4})), g.constant(random_tensor({5, 5, 2, 4}, rng)), 2);
  EXPECT_EQ(y.shape(), (Shape{2, 6, 6, 2}));
  for (double v : y.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(Deconv2d, AdjointIdentity) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    Graph g;
    // x lives on the 4x4 side, y on the 8x8 side.
    const Tensor x = random_tensor({2, 4, 4, 3}, rng);
    const Tensor y = random_tensor({2, 8, 8, 5}, rng);
    const Tensor k = random_tensor({5, 5, 5, 3}, rng);
    Var cy = conv2d(g.constant(y), g.constant(k), 2);
    Var dx = deconv2d(g.constant(x), g.constant(k), 2);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) lhs += cy.value()[i] * x[i];
    for (std::size_t i = 0; i < y.size(); ++i) rhs += y[i] * dx.value()[i];
    EXPECT_LT(std::abs(lhs - rhs), 1e-6 * std::max(1.0, std::abs(lhs))) << "seed " << seed;
  }
}

TEST(Deconv2d, GradientsMatchFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    ParameterSet p;
    p.add("x", random_tensor({2, 4, 4, 3}, rng));
    p.add("k", random_tensor({5, 5, 2, 3}, rng));
    const auto report = check_layer(p, {2, 8, 8, 2}, seed, [](Graph& g, ParameterSet& q) {
      return deconv2d(g.parameter(q.at("x")), g.parameter(q.at("k")), 2);
    });
    EXPECT_LT(report.max_rel_error(), kFdTolerance) << "seed " << seed;
  }
}

TEST(ChannelBias, GradientsMatchFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    ParameterSet p;
    p.add("x", random_tensor({2, 3, 3, 4}, rng));
    p.add("b", random_tensor({4}, rng));
    const auto report = check_layer(p, {2, 3, 3, 4}, seed, [](Graph& g, ParameterSet& q) {
      return add_channel_bias(g.parameter(q.at("x")), g.parameter(q.at("b")));
    });
    EXPECT_LT(report.max_rel_error(), kFdTolerance) << "seed " << seed;
  }
}

// --- batch norm ----------------------------------------------------------------

struct ChannelMoments {
  std::vector<double> mean, var;
};

ChannelMoments moments(const Tensor& t) {
  const std::size_t c = t.shape().back();
  const std::size_t rows = t.size() / c;
  ChannelMoments m{std::vector<double>(c), std::vector<double>(c)};
  for (std::size_t i = 0; i < t.size(); ++i) m.mean[i % c] += t[i] / static_cast<double>(rows);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = t[i] - m.mean[i % c];
    m.var[i % c] += d * d / static_cast<double>(rows);
  }
  return m;
}

TEST(BatchNorm, TrainModeStandardizes) {
  Rng rng(8);
  Graph g;
  // Wide spread so the 1e-5 variance epsilon stays below the tolerance.
  const Tensor x = random_tensor({4, 5, 5, 3}, rng, -50.0, 80.0);
  Tensor rm({3}), rv({3}, 1.0);
  Var y = batch_norm(g.constant(x), g.constant(Tensor({3}, 1.0)), g.constant(Tensor({3}, 0.0)),
                     rm, rv, {});
  const auto m = moments(y.value());
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(m.mean[c], 0.0, 1e-6);
    EXPECT_NEAR(m.var[c], 1.0, 1e-6);
  }
}

TEST(BatchNorm, AffineOnNormalizedInput) {
  Rng rng(9);
  Graph g;
  Tensor x = random_tensor({8, 4, 4, 2}, rng);
  const auto m0 = moments(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = (x[i] - m0.mean[i % 2]) / std::sqrt(m0.var[i % 2]);
  }
  Tensor rm({2}), rv({2}, 1.0);
  Var y = batch_norm(g.constant(x), g.constant(Tensor({2}, 2.0)), g.constant(Tensor({2}, 3.0)),
                     rm, rv, {});
  const auto m = moments(y.value());
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(m.mean[c], 3.0, 1e-6);
    EXPECT_NEAR(std::sqrt(m.var[c]), 2.0, 1e-4);
  }
}

TEST(BatchNorm, RunningStatisticsAndInferMode) {
  Rng rng(10);
  const Tensor x = random_tensor({6, 2, 2, 2}, rng, 0.0, 4.0);
  const auto m = moments(x);
  Tensor rm({2}), rv({2}, 1.0);
  {
    Graph g;
    batch_norm(g.constant(x), g.constant(Tensor({2}, 1.0)), g.constant(Tensor({2})), rm, rv, {});
  }
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(rm[c], 0.01 * m.mean[c], 1e-15);
    EXPECT_NEAR(rv[c], 0.99 + 0.01 * m.var[c], 1e-15);
  }
  const Tensor rm_before = rm, rv_before = rv;
  BatchNormOptions infer;
  infer.mode = Mode::infer;
  Graph g;
  Var y = batch_norm(g.constant(x), g.constant(Tensor({2}, 1.0)), g.constant(Tensor({2})), rm, rv,
                     infer);
  EXPECT_EQ(rm, rm_before);
  EXPECT_EQ(rv, rv_before);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t c = i % 2;
    EXPECT_NEAR(y.value()[i], (x[i] - rm[c]) / std::sqrt(rv[c] + 1e-5), 1e-12);
  }
  // B = 1 is fine for inference.
  Graph g1;
  EXPECT_NO_THROW(batch_norm(g1.constant(Tensor({1, 2, 2, 2})), g1.constant(Tensor({2}, 1.0)),
                             g1.constant(Tensor({2})), rm, rv, infer));
}

TEST(BatchNorm, SingleSampleTrainBatchIsError) {
  Graph g;
  Tensor rm({2}), rv({2}, 1.0);
  EXPECT_EQ(kind_of([&] {
              batch_norm(g.constant(Tensor({1, 3, 3, 2})), g.constant(Tensor({2}, 1.0)),
                         g.constant(Tensor({2})), rm, rv, {});
            }),
            ErrorKind::dimension);
}

TEST(BatchNorm, GradientsMatchFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    ParameterSet p;
    p.add("x", random_tensor({3, 3, 3, 2}, rng));
    p.add("gamma", random_tensor({2}, rng, 0.5, 1.5));
    p.add("beta", random_tensor({2}, rng));
    Tensor rm({2}), rv({2}, 1.0);
    BatchNormOptions opts;
    opts.update_running = false;
    const auto report =
        check_layer(p, {3, 3, 3, 2}, seed, [&](Graph& g, ParameterSet& q) {
          return batch_norm(g.parameter(q.at("x")), g.parameter(q.at("gamma")),
                            g.parameter(q.at("beta")), rm, rv, opts);
        });
    EXPECT_LT(report.max_rel_error(), kFdTolerance) << "seed " << seed;
  }
}

// --- activations -----------------------------------------------------------------

TEST(Activation, Examples) {
  Graph g;
  EXPECT_DOUBLE_EQ(activation(g.constant(tensor({1}, {-1.0})), Activation::lrelu, 0.2).value()[0],
                   -0.2);
  EXPECT_EQ(activation(g.constant(tensor({1}, {0.0})), Activation::tanh).value()[0], 0.0);
  EXPECT_EQ(activation(g.constant(tensor({1}, {-3.0})), Activation::relu).value()[0], 0.0);
  EXPECT_EQ(activation(g.constant(tensor({1}, {0.0})), Activation::sigmoid).value()[0], 0.5);
}

TEST(Activation, RangeProperties) {
  Rng rng(12);
  Graph g;
  const Tensor x = random_tensor({1000}, rng, -15.0, 15.0);
  Var t = activation(g.constant(x), Activation::tanh);
  Var r = activation(g.constant(x), Activation::relu);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_GT(t.value()[i], -1.0);
    EXPECT_LT(t.value()[i], 1.0);
    EXPECT_GE(r.value()[i], 0.0);
  }
}

TEST(Activation, GradientsMatchFiniteDifferences) {
  const std::pair<Activation, double> cases[] = {{Activation::relu, kFdTolerance},
                                                 {Activation::lrelu, kFdTolerance},
                                                 {Activation::tanh, kFdTolerance},
                                                 {Activation::sigmoid, 1e-6}};
  for (const auto& [kind, tol] : cases) {
    for (int seed = 0; seed < kSeeds; ++seed) {
      Rng rng(seed);
      ParameterSet p;
      Tensor x = random_tensor({4, 6}, rng, -3.0, 3.0);
      // Keep relu kinks away from the difference stencil.
      for (double& v : x.values()) {
        if (std::abs(v) < 1e-3) v = 0.5;
      }
      p.add("x", x);
      const auto report = check_layer(p, {4, 6}, seed, [kind](Graph& g, ParameterSet& q) {
        return activation(g.parameter(q.at("x")), kind, 0.2);
      });
      EXPECT_LT(report.max_rel_error(), tol) << "kind " << static_cast<int>(kind) << " seed " << seed;
    }
  }
}

// --- dropout -------------------------------------------------------------------

TEST(Dropout, IdentityCases) {
  Rng rng(13);
  Graph g;
  const Tensor x = random_tensor({3, 7}, rng);
  Rng drop(1);
  EXPECT_EQ(dropout(g.constant(x), 0.5, Mode::infer, drop).value(), x);
  EXPECT_EQ(dropout(g.constant(x), 1.0, Mode::train, drop).value(), x);
}

TEST(Dropout, ZeroFractionAndScaling) {
  Graph g;
  const Tensor x({100000}, 1.5);
  Rng drop(2024);
  Var y = dropout(g.constant(x), 0.5, Mode::train, drop);
  std::size_t zeros = 0;
  for (double v : y.value().values()) {
    if (v == 0.0) {
      ++zeros;
    } else {
      EXPECT_EQ(v, 3.0);
    }
  }
  const double frac = static_cast<double>(zeros) / static_cast<double>(x.size());
  EXPECT_NEAR(frac, 0.5, 0.02);
}

TEST(Dropout, InvalidKeepProbability) {
  Graph g;
  Rng drop(1);
  Var x = g.constant(Tensor({4}, 1.0));
  EXPECT_EQ(kind_of([&] { dropout(x, 0.0, Mode::train, drop); }), ErrorKind::config);
  EXPECT_EQ(kind_of([&] { dropout(x, -0.1, Mode::train, drop); }), ErrorKind::config);
}

TEST(Dropout, GradientRoutesThroughMask) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    ParameterSet p;
    p.add("x", random_tensor({5, 8}, rng));
    const auto report = check_layer(p, {5, 8}, seed, [seed](Graph& g, ParameterSet& q) {
      Rng drop(static_cast<std::uint64_t>(seed));
      return dropout(g.parameter(q.at("x")), 0.5, Mode::train, drop);
    });
    EXPECT_LT(report.max_rel_error(), kFdTolerance) << "seed " << seed;
  }
}

// --- pooling, reshapes and scalars ------------------------------------------------

TEST(GlobalAvgPool, Examples) {
  Graph g;
  Var y = global_avg_pool(g.constant(tensor({1, 2, 2, 1}, {1, 2, 3, 4})));
  EXPECT_EQ(y.shape(), (Shape{1, 1}));
  EXPECT_EQ(y.value()[0], 2.5);
  Var c = global_avg_pool(g.constant(Tensor({2, 3, 3, 4}, -0.75)));
  for (double v : c.value().values()) EXPECT_DOUBLE_EQ(v, -0.75);
}

TEST(GlobalAvgPool, GradientsMatchFiniteDifferences) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    ParameterSet p;
    p.add("x", random_tensor({2, 3, 4, 3}, rng));
    const auto report = check_layer(p, {2, 3}, seed, [](Graph& g, ParameterSet& q) {
      return global_avg_pool(g.parameter(q.at("x")));
    });
    EXPECT_LT(report.max_rel_error(), 1e-6) << "seed " << seed;
  }
}

TEST(Shapes, ReshapeAndSliceGradients) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    ParameterSet p;
    p.add("x", random_tensor({3, 8}, rng));
    const auto report = check_layer(p, {3, 2}, seed, [](Graph& g, ParameterSet& q) {
      Var r = reshape(g.parameter(q.at("x")), {3, 2, 2, 2});
      return slice_columns(reshape(r, {3, 8}), 5, 2);
    });
    EXPECT_LT(report.max_rel_error(), kFdTolerance);
  }
}

TEST(Shapes, ConcatAndSliceBatch) {
  Graph g;
  Var a = g.constant(tensor({2, 1, 2}, {1, 2, 3, 4}));
  Var b = g.constant(tensor({1, 1, 2}, {5, 6}));
  Var c = concat_batch(a, b);
  EXPECT_EQ(c.shape(), (Shape{3, 1, 2}));
  EXPECT_EQ(c.value(), tensor({3, 1, 2}, {1, 2, 3, 4, 5, 6}));
  Var s = slice_batch(c, 1, 2);
  EXPECT_EQ(s.shape(), (Shape{2, 1, 2}));
  EXPECT_EQ(s.value(), tensor({2, 1, 2}, {3, 4, 5, 6}));
  EXPECT_EQ(slice_batch(c, 0, 2).value(), a.value());
  EXPECT_THROW(concat_batch(a, g.constant(Tensor({1, 2, 1}))), Error);
  EXPECT_THROW(slice_batch(c, 2, 2), Error);
  EXPECT_THROW(slice_batch(c, 0, 0), Error);
}

TEST(Shapes, ConcatAndSliceBatchGradients) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    ParameterSet p;
    p.add("a", random_tensor({2, 2, 2, 3}, rng));
    p.add("b", random_tensor({3, 2, 2, 3}, rng));
    const auto report = check_layer(p, {3, 2, 2, 3}, seed, [](Graph& g, ParameterSet& q) {
      return slice_batch(concat_batch(g.parameter(q.at("a")), g.parameter(q.at("b"))), 1, 3);
    });
    EXPECT_LT(report.max_rel_error(), kFdTolerance);
  }
}

TEST(Shapes, ConcatRoutesGradientPastConstant) {
  ParameterSet p;
  p.add("w", Tensor({2, 2}, 1.0));
  Graph g;
  Var c = concat_batch(g.constant(Tensor({1, 2}, 3.0)), g.parameter(p.at("w")));
  Var out = weighted_sum(c, tensor({3, 2}, {1, 2, 3, 4, 5, 6}));
  g.backward(out);
  EXPECT_EQ(out.value().item(), 27.0);
  EXPECT_EQ(p.at("w").grad, tensor({2, 2}, {3, 4, 5, 6}));
}

TEST(GradCheck, LinearFunctionIsExactToRounding) {
  Rng rng(14);
  ParameterSet p;
  p.add("x", random_tensor({4, 3}, rng));
  const Tensor w = random_tensor({4, 3}, rng);
  GradCheckOptions opts;
  const auto report = grad_check(
      [&](Graph& g, ParameterSet& q) { return scale(weighted_sum(g.parameter(q.at("x")), w), 3.0); },
      p, opts);
  EXPECT_LT(report.max_rel_error(), 1e-10);
}

TEST(GradCheck, SuiteCoversEveryLayerAndBothNetworks) {
  SuiteOptions opts;
  opts.size = 16;
  const auto results = run_gradcheck_suite(opts);
  std::vector<std::string> names;
  for (const auto& r : results) {
    names.push_back(r.name);
    EXPECT_LT(r.report.max_rel_error(), kFdTolerance) << r.name;
  }
  for (const char* expected : {"dense", "conv2d", "deconv2d", "batch_norm", "relu", "lrelu", "tanh",
                               "sigmoid", "dropout", "global_avg_pool", "concat_batch",
                               "slice_batch"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), expected), names.end()) << expected;
  }
}

// --- determinism -----------------------------------------------------------------

TEST(Determinism, ForwardBackwardBitwiseRepeatable) {
  auto run = [] {
    Rng rng(15);
    ParameterSet p;
    p.add("x", random_tensor({2, 8, 8, 3}, rng));
    p.add("k", random_tensor({5, 5, 3, 4}, rng));
    p.add("gamma", Tensor({4}, 1.0));
    p.add("beta", Tensor({4}));
    Tensor rm({4}), rv({4}, 1.0);
    Graph g;
    Var y = conv2d(g.parameter(p.at("x")), g.parameter(p.at("k")), 2);
    y = batch_norm(y, g.parameter(p.at("gamma")), g.parameter(p.at("beta")), rm, rv, {});
    Rng drop(3);
    y = dropout(activation(y, Activation::lrelu, 0.2), 0.5, Mode::train, drop);
    Var out = sum(global_avg_pool(y));
    g.backward(out);
    return std::make_pair(out.value(), p);
  };
  EXPECT_EQ(run(), run());
}

// --- adam ------------------------------------------------------------------------

TEST(Adam, ZeroGradientsLeaveValues) {
  Rng rng(16);
  ParameterSet p;
  p.add("a", random_tensor({3, 3}, rng));
  p.add("b", random_tensor({2}, rng));
  const ParameterSet before = p;
  AdamConfig cfg;
  cfg.clip_norm = 5.0;
  adam_step(p, cfg);
  EXPECT_EQ(p.at("a").value, before.at("a").value);
  EXPECT_EQ(p.at("b").value, before.at("b").value);
  EXPECT_EQ(p.at("a").step, 1);
  EXPECT_EQ(p.at("b").step, 1);
}

TEST(Adam, FirstStepOfScalar) {
  ParameterSet p;
  p.add("theta", Tensor::scalar(0.0));
  p.at("theta").grad[0] = 1.0;
  AdamConfig cfg;
  cfg.learning_rate = 0.001;
  adam_step(p, cfg);
  EXPECT_NEAR(p.at("theta").value[0], -0.001, 1e-6);
}

TEST(Adam, GlobalNormClipping) {
  auto make = [](double scale) {
    ParameterSet p;
    p.add("a", Tensor({2}));
    p.add("b", Tensor({1}));
    // Global norm of (6, 0, 8) is 10.
    p.at("a").grad[0] = 6.0 * scale;
    p.at("b").grad[0] = 8.0 * scale;
    return p;
  };
  ParameterSet clipped = make(1.0);
  ParameterSet halved = make(0.5);
  AdamConfig cfg;
  cfg.clip_norm = 5.0;
  const auto report = adam_step(clipped, cfg);
  EXPECT_DOUBLE_EQ(report.grad_norm, 10.0);
  EXPECT_DOUBLE_EQ(report.clip_scale, 0.5);
  EXPECT_DOUBLE_EQ(clipped.at("a").grad[0], 3.0);
  EXPECT_DOUBLE_EQ(clipped.at("b").grad[0], 4.0);
  AdamConfig plain;
  adam_step(halved, plain);
  EXPECT_EQ(clipped.at("a").m, halved.at("a").m);
  EXPECT_EQ(clipped.at("b").v, halved.at("b").v);
}

TEST(Adam, NonFiniteGradientNamesParameterAndChangesNothing) {
  ParameterSet p;
  p.add("fine", Tensor({2}, 1.0));
  p.add("broken", Tensor({2}, 1.0));
  p.at("fine").grad[0] = 0.3;
  p.at("broken").grad[1] = std::nan("");
  const ParameterSet before = p;
  try {
    adam_step(p, AdamConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
  }
  EXPECT_EQ(p.at("fine").value, before.at("fine").value);
  EXPECT_EQ(p.at("fine").step, 0);
}

}  // namespace
}  // namespace vagan
