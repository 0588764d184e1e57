#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "sann/errors.hpp"
#include "sann/network.hpp"

namespace sann {
namespace {

constexpr SalienceMode kModes[] = {SalienceMode::Fig7, SalienceMode::LiteralEq2};

Network unit_chain(double w = 1.0) {
  return Network::from_parts(Matrix{{w}}, Matrix{{w}}, {0.0, 0.0}, 1.0, 0.2);
}

std::vector<Example> toy_examples(Rng& rng, std::size_t n, std::size_t n_in, double s_first = 0.0) {
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    Example ex;
    ex.input = rng_uniform(rng, 0.0, 1.0, n_in);
    ex.target = {rng.uniform(-0.6, 0.6)};
    if (i == 0) ex.tag.s = s_first;
    out.push_back(std::move(ex));
  }
  return out;
}

TEST(Init, DefaultTopology) {
  Rng rng(1);
  const Network net(49, 10, 1, 1.0, 0.2, rng);
  EXPECT_EQ(net.w_ih().rows(), 49u);
  EXPECT_EQ(net.w_ih().cols(), 10u);
  EXPECT_EQ(net.w_ho().rows(), 10u);
  EXPECT_EQ(net.w_ho().cols(), 1u);
  ASSERT_EQ(net.thresholds().size(), 11u);
  for (double t : net.thresholds()) EXPECT_EQ(t, 0.0);
  for (double w : net.w_ih().data()) {
    EXPECT_GE(w, -0.2);
    EXPECT_LE(w, 0.2);
  }
  for (double w : net.w_ho().data()) {
    EXPECT_GE(w, -2.0);
    EXPECT_LE(w, 2.0);
  }
}

TEST(Init, SameSeedSameNetwork) {
  Rng a(17), b(17);
  EXPECT_TRUE(Network(6, 4, 2, 1.0, 0.2, a).same_parameters(Network(6, 4, 2, 1.0, 0.2, b)));
}

TEST(Init, InvalidConfiguration) {
  Rng rng(1);
  EXPECT_THROW(Network(3, 2, 1, 1.0, 0.0, rng), ConfigError);
  EXPECT_THROW(Network(3, 2, 1, 1.0, 1.5, rng), ConfigError);
  EXPECT_THROW(Network(3, 2, 1, 0.0, 0.2, rng), ConfigError);
  EXPECT_THROW(Network(0, 2, 1, 1.0, 0.2, rng), ConfigError);
  EXPECT_THROW(Network(3, 0, 1, 1.0, 0.2, rng), ConfigError);
}

TEST(Forward, ZeroNetwork) {
  const Network net = Network::from_parts(Matrix(3, 2), Matrix(2, 1), {0, 0, 0}, 1.0, 0.2);
  const auto t = forward(net, std::vector<double>{0.3, 0.9, 0.1});
  for (double a : t.activations) EXPECT_EQ(a, 0.0);
  EXPECT_EQ(t.output, std::vector<double>{0.0});
}

TEST(Forward, UnitChain) {
  const auto t = forward(unit_chain(), std::vector<double>{0.5});
  EXPECT_NEAR(t.activations[0], 0.46211715726000974, 1e-15);
  EXPECT_NEAR(t.output[0], 0.4318081805950961, 1e-15);
  EXPECT_NEAR(t.output[0], 0.43204, 5e-4);
}

TEST(Forward, RaisingThresholdLowersActivation) {
  Rng rng(4);
  Network net(4, 3, 1, 1.0, 0.2, rng);
  const std::vector<double> x{0.2, 0.4, 0.6, 0.8};
  double prev = forward(net, x).activations[1];
  for (double t : {0.1, 0.3, 0.7, 1.0}) {
    net.set_threshold(1, t);
    const double a = forward(net, x).activations[1];
    EXPECT_LT(a, prev);
    prev = a;
  }
}

TEST(Forward, LengthMismatch) {
  EXPECT_THROW(forward(unit_chain(), std::vector<double>{0.5, 0.5}), ShapeError);
}

TEST(Backprop, ZeroErrorLeavesWeightsAlone) {
  Rng rng(3);
  Network net(3, 2, 1, 1.0, 0.2, rng);
  const std::vector<double> x{0.1, 0.5, 0.9};
  const auto target = forward(net, x).output;
  const Network before = net;
  EXPECT_EQ(backprop_step(net, x, target, 0.5, 0.1), 0.0);
  EXPECT_TRUE(net.same_parameters(before));
}

TEST(Backprop, ThresholdsUntouched) {
  Rng rng(3);
  Network net(3, 2, 1, 1.0, 0.2, rng);
  net.set_threshold(0, 0.4);
  net.set_threshold(2, -0.3);
  const std::vector<double> th(net.thresholds().begin(), net.thresholds().end());
  backprop_step(net, std::vector<double>{0.1, 0.5, 0.9}, std::vector<double>{0.7}, 0.5, 0.1);
  EXPECT_EQ(std::vector<double>(net.thresholds().begin(), net.thresholds().end()), th);
}

void check_gradients(std::size_t ni, std::size_t nh, std::size_t no, std::uint64_t seed) {
  Rng rng(seed);
  Network net(ni, nh, no, 1.0, 0.2, rng);
  for (std::size_t i = 0; i < net.n_nodes(); ++i) net.set_threshold(i, rng.uniform(-0.5, 0.5));
  const auto x = rng_uniform(rng, 0.0, 1.0, ni);
  const auto target = rng_uniform(rng, -0.9, 0.9, no);
  const Gradients g = compute_gradients(net, forward(net, x), target);

  constexpr double h = 1e-5;
  auto numeric = [&](Matrix& (Network::*access)(), std::size_t idx) {
    double& w = ((net.*access)()).data()[idx];
    const double orig = w;
    w = orig + h;
    const double up = loss(net, x, target);
    w = orig - h;
    const double down = loss(net, x, target);
    w = orig;
    return (up - down) / (2.0 * h);
  };
  for (std::size_t i = 0; i < g.d_ih.size(); ++i) {
    EXPECT_NEAR(g.d_ih.data()[i], numeric(&Network::w_ih_mut, i), 1e-6) << "w_ih " << i;
  }
  for (std::size_t i = 0; i < g.d_ho.size(); ++i) {
    EXPECT_NEAR(g.d_ho.data()[i], numeric(&Network::w_ho_mut, i), 1e-6) << "w_ho " << i;
  }
}

TEST(Backprop, GradientsMatchFiniteDifferences321) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) check_gradients(3, 2, 1, seed);
}

TEST(Backprop, GradientsMatchFiniteDifferences432) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) check_gradients(4, 3, 2, seed);
}

TEST(Backprop, LearnsSmallDataset) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    Network net(3, 4, 1, 1.0, 0.2, rng);
    std::vector<Example> examples;
    for (int i = 0; i < 5; ++i) {
      Example ex;
      ex.input = rng_uniform(rng, 0.0, 1.0, 3);
      ex.target = {0.8 * (ex.input[0] - ex.input[1])};
      examples.push_back(std::move(ex));
    }
    const auto curve = train_multi_trial(net, examples, TrainParams{});
    ASSERT_EQ(curve.size(), 200u);
    EXPECT_LT(curve.back(), 0.1 * curve.front()) << "seed " << seed;
  }
}

TEST(DAdj, SignTable) {
  EXPECT_EQ(d_adj(0.5, 1.0), -1);
  EXPECT_EQ(d_adj(0.5, -1.0), 1);
  EXPECT_EQ(d_adj(-0.5, 1.0), 1);
  EXPECT_EQ(d_adj(-0.5, -1.0), -1);
}

TEST(DAdj, ZeroProductIsNeutral) {
  for (double s : {-2.0, 0.0, 3.0}) EXPECT_EQ(d_adj(0.0, s), 0);
  for (double a : {-0.7, 0.0, 0.7}) EXPECT_EQ(d_adj(a, 0.0), 0);
}

TEST(DAdj, AllQuadrants) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-1.0, 1.0);
    const double s = rng.uniform(-6.0, 6.0);
    const int expect = (a * s > 0) ? -1 : (a * s < 0 ? 1 : 0);
    ASSERT_EQ(d_adj(a, s), expect);
  }
}

// A node with activation exactly `a` after a forward pass: 1-1-1 chain
// whose hidden sum is atanh(a).
std::pair<Network, ForwardTrace> node_with_activation(double a) {
  Network net = Network::from_parts(Matrix{{std::atanh(a)}}, Matrix{{0.0}}, {0.0, 0.0}, 1.0, 0.2);
  auto trace = forward(net, std::vector<double>{1.0});
  return {std::move(net), std::move(trace)};
}

TEST(Salience, ZeroSignalChangesNothing) {
  for (auto mode : kModes) {
    auto [net, trace] = node_with_activation(0.5);
    const Network before = net;
    apply_salience(net, trace, 0.0, mode);
    EXPECT_TRUE(net.same_parameters(before));
  }
}

TEST(Salience, Fig7StepFromZero) {
  auto [net, trace] = node_with_activation(0.5);
  ASSERT_NEAR(trace.activations[0], 0.5, 1e-15);
  apply_salience(net, trace, 1.0, SalienceMode::Fig7);
  EXPECT_NEAR(net.thresholds()[0], -0.1, 1e-15);
}

TEST(Salience, LiteralStepFromZero) {
  auto [net, trace] = node_with_activation(0.5);
  apply_salience(net, trace, 1.0, SalienceMode::LiteralEq2);
  EXPECT_NEAR(net.thresholds()[0], 0.1, 1e-15);
}

TEST(Salience, SaturatedNodeApproachesLimitWithoutCrossing) {
  Network net = Network::from_parts(Matrix{{50.0}}, Matrix{{0.0}}, {0.0, 0.0}, 1.0, 0.2);
  const std::vector<double> x{1.0};
  double prev = net.thresholds()[0];
  for (int i = 0; i < 100; ++i) {
    const auto trace = forward(net, x);
    ASSERT_GT(trace.activations[0], 0.99);
    apply_salience(net, trace, 1.0, SalienceMode::Fig7);
    const double t = net.thresholds()[0];
    EXPECT_LE(t, prev);
    EXPECT_GE(t, -net.t_lim());
    prev = t;
  }
  EXPECT_NEAR(prev, -1.0, 1e-6);
}

TEST(Salience, StaleTraceRejected) {
  Rng rng(5);
  Network net(3, 2, 1, 1.0, 0.2, rng);
  const std::vector<double> x{0.1, 0.2, 0.3};
  const auto trace = forward(net, x);
  backprop_step(net, x, std::vector<double>{0.5}, 0.5, 0.1);
  EXPECT_THROW(apply_salience(net, trace, 1.0, SalienceMode::Fig7), ContractError);
  const auto fresh = forward(net, x);
  apply_salience(net, fresh, 1.0, SalienceMode::Fig7);
  EXPECT_THROW(apply_salience(net, fresh, 1.0, SalienceMode::Fig7), ContractError);
}

TEST(Salience, ThresholdsStayWithinLimit) {
  for (auto mode : kModes) {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      const double t_lim = rng.uniform(0.1, 5.0);
      Network net(4, 5, 2, t_lim, rng.uniform(0.01, 1.0), rng);
      for (int step = 0; step < 200; ++step) {
        const auto x = rng_uniform(rng, -3.0, 3.0, 4);
        apply_salience(net, forward(net, x), rng.uniform(-12.0, 12.0), mode);
        for (double t : net.thresholds()) ASSERT_LE(std::abs(t), t_lim);
      }
    }
  }
}

TEST(Salience, Fig7PositiveSignalPotentiatesActiveHiddenNodes) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    Network net(5, 6, 1, 1.0, 0.2, rng);
    for (std::size_t i = 0; i < net.n_nodes(); ++i) net.set_threshold(i, rng.uniform(-0.9, 0.9));
    const auto x = rng_uniform(rng, 0.0, 1.0, 5);
    const auto before = forward(net, x);
    apply_salience(net, before, rng.uniform(0.1, 6.0), SalienceMode::Fig7);
    const auto after = forward(net, x);
    for (std::size_t j = 0; j < net.n_hidden(); ++j) {
      if (before.activations[j] > 0.0) {
        EXPECT_GE(after.activations[j], before.activations[j]);
      }
    }
  }
}

TEST(Salience, LiteralPositiveSignalDampsActiveHiddenNodes) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    Network net(5, 6, 1, 1.0, 0.2, rng);
    const auto x = rng_uniform(rng, 0.0, 1.0, 5);
    const auto before = forward(net, x);
    apply_salience(net, before, rng.uniform(0.1, 6.0), SalienceMode::LiteralEq2);
    const auto after = forward(net, x);
    for (std::size_t j = 0; j < net.n_hidden(); ++j) {
      if (before.activations[j] > 0.0) {
        EXPECT_LE(after.activations[j], before.activations[j]);
      }
    }
  }
}

TEST(Salience, ModeNames) {
  EXPECT_EQ(parse_salience_mode("fig7"), SalienceMode::Fig7);
  EXPECT_EQ(parse_salience_mode("literal-eq2"), SalienceMode::LiteralEq2);
  EXPECT_EQ(to_string(SalienceMode::LiteralEq2), "literal-eq2");
  EXPECT_THROW(parse_salience_mode("eq2"), ConfigError);
}

TEST(ReverseSalience, InactiveNodesGiveZero) {
  const Network net = Network::from_parts(Matrix(2, 3), Matrix(3, 1), {0, 0, 0, 0}, 1.0, 0.2);
  const auto rs = reverse_salience(net, forward(net, std::vector<double>{0.4, 0.6}));
  EXPECT_EQ(rs.total, 0.0);
}

TEST(ReverseSalience, SingleNodeValue) {
  const Network net = unit_chain();
  ForwardTrace trace;
  trace.activations = {1.0, 0.0};
  trace.v_sums = {0.8, 0.0};
  const auto rs = reverse_salience(net, trace);
  EXPECT_DOUBLE_EQ(rs.per_node[0], -0.8);
  EXPECT_DOUBLE_EQ(rs.total, -0.8);
}

TEST(ReverseSalience, ZeroThresholdsGiveMinusSumAV) {
  Rng rng(6);
  const Network net(5, 4, 1, 1.0, 0.2, rng);
  const auto x = rng_uniform(rng, 0.0, 1.0, 5);
  const auto trace = forward(net, x);
  double expect = 0.0;
  for (std::size_t i = 0; i < trace.activations.size(); ++i) expect -= trace.activations[i] * trace.v_sums[i];
  EXPECT_NEAR(reverse_salience(net, trace).total, expect, 1e-14);
}

TEST(RelativeReverseSalience, ControlInputIsZero) {
  Rng rng(6);
  Network net(5, 4, 1, 1.0, 0.2, rng);
  net.set_threshold(2, 0.3);
  EXPECT_EQ(relative_reverse_salience(net, std::vector<double>(5, 0.5)), 0.0);
}

TEST(RelativeReverseSalience, ZeroNetworkIsZeroEverywhere) {
  const Network net = Network::from_parts(Matrix(3, 2), Matrix(2, 1), {0, 0, 0}, 1.0, 0.2);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(relative_reverse_salience(net, rng_uniform(rng, 0.0, 1.0, 3)), 0.0);
  EXPECT_THROW(relative_reverse_salience(net, std::vector<double>(2, 0.5)), ShapeError);
}

TEST(Training, NoTagsKeepThresholdsAtZero) {
  for (auto mode : kModes) {
    Rng rng(21);
    Network net(4, 3, 1, 1.0, 0.2, rng);
    const auto examples = toy_examples(rng, 8, 4);
    TrainParams p;
    p.epochs = 50;
    p.mode = mode;
    const auto curve = train_multi_trial(net, examples, p);
    EXPECT_EQ(curve.size(), 50u);
    for (double t : net.thresholds()) EXPECT_EQ(t, 0.0);
  }
}

TEST(Training, EmptyDatasetRejected) {
  Rng rng(1);
  Network net(2, 2, 1, 1.0, 0.2, rng);
  EXPECT_THROW(train_multi_trial(net, std::vector<Example>{}, TrainParams{}), ConfigError);
  EXPECT_THROW(train_single_trial(net, std::vector<Example>{}, TrainParams{}, 1), ConfigError);
}

TEST(Training, Deterministic) {
  auto run = [] {
    Rng rng(33);
    Network net(4, 3, 1, 1.0, 0.2, rng);
    const auto examples = toy_examples(rng, 6, 4, 1.0);
    TrainParams p;
    p.epochs = 40;
    const auto curve = train_multi_trial(net, examples, p);
    return std::make_pair(net, curve);
  };
  const auto [a, ca] = run();
  const auto [b, cb] = run();
  EXPECT_TRUE(a.same_parameters(b));
  EXPECT_EQ(ca, cb);
}

TEST(Training, SalienceMovesThresholds) {
  Rng rng(33);
  Network net(4, 3, 1, 1.0, 0.2, rng);
  const auto examples = toy_examples(rng, 6, 4, 1.0);
  TrainParams p;
  p.epochs = 5;
  train_multi_trial(net, examples, p);
  double moved = 0.0;
  for (double t : net.thresholds()) moved += std::abs(t);
  EXPECT_GT(moved, 0.0);
}

TEST(SingleTrial, WithoutTagsMatchesPlainTraining) {
  Rng rng(44);
  const Network init(4, 3, 1, 1.0, 0.2, rng);
  const auto examples = toy_examples(rng, 6, 4);
  TrainParams p;
  p.epochs = 30;
  Network a = init, b = init;
  const auto ca = train_single_trial(a, examples, p, 4);
  const auto cb = train_multi_trial(b, examples, p);
  EXPECT_TRUE(a.same_parameters(b));
  EXPECT_EQ(ca, cb);
}

TEST(SingleTrial, LargerAmplificationMovesThresholdsFurther) {
  for (auto mode : kModes) {
    Rng rng(45);
    const Network init(4, 3, 1, 1.0, 0.2, rng);
    const auto examples = toy_examples(rng, 6, 4, 1.0);
    TrainParams p;
    p.epochs = 30;
    p.mode = mode;
    Network a = init, b = init;
    train_single_trial(a, examples, p, 2);
    train_single_trial(b, examples, p, 5);
    const auto trace = forward(a, examples[0].input);
    bool any = false;
    for (std::size_t i = 0; i < a.n_nodes(); ++i) {
      if (std::abs(trace.activations[i]) < 1e-3) continue;
      any = true;
      EXPECT_GT(std::abs(b.thresholds()[i]), std::abs(a.thresholds()[i])) << "node " << i;
    }
    EXPECT_TRUE(any);
  }
}

TEST(SingleTrial, AmplificationBelowOneRejected) {
  Rng rng(1);
  Network net(2, 2, 1, 1.0, 0.2, rng);
  const auto examples = toy_examples(rng, 2, 2, 1.0);
  EXPECT_THROW(train_single_trial(net, examples, TrainParams{}, 0), ConfigError);
}

TEST(Persistence, RoundTrip) {
  Rng rng(50);
  Network net(3, 4, 2, 1.5, 0.2, rng);
  net.set_threshold(1, -0.75);
  net.set_threshold(5, 1.5);
  std::stringstream ss;
  save_network(ss, net);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "SANN 3 4 2 1.5 0.20000000000000001");
  ss.seekg(0);
  EXPECT_TRUE(load_network(ss).same_parameters(net));
}

TEST(Persistence, RejectsGarbage) {
  std::istringstream bad("SANN 1 1 1 1 0.2\n0.5\n");
  EXPECT_THROW(load_network(bad), ParseError);
  std::istringstream header("NET 1 1 1 1 0.2\n0.5\n0.5\n0 0\n");
  EXPECT_THROW(load_network(header), ParseError);
}

}  // namespace
}  // namespace sann
