#include <random>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "wdnse/estimator.hpp"
#include "wdnse/linearization.hpp"

using namespace wdnse;

TEST(PipeCoefficient, Examples)
{
  EXPECT_DOUBLE_EQ(pipe_coefficient(0.0, {2.0, 1.852}), 0.0);
  EXPECT_DOUBLE_EQ(pipe_coefficient(1.0, {1.0, 2.0}), 0.0);
  EXPECT_DOUBLE_EQ(pipe_coefficient(2.0, {1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(2.0 + pipe_coefficient(2.0, {1.0, 2.0}), pipe_headloss(2.0, {1.0, 2.0}));
}

TEST(PumpCoefficients, Examples)
{
  const PumpCurve c{100.0, 0.1, 2.0, 1.0};
  const auto k = pump_coefficients(10.0, c);
  EXPECT_DOUBLE_EQ(k.intercept, -100.0);
  EXPECT_DOUBLE_EQ(k.slope, 1.0);
  EXPECT_DOUBLE_EQ(k.intercept + k.slope * 10.0, pump_headgain(10.0, c));
  EXPECT_DOUBLE_EQ(pump_coefficients(3.0, c).slope, 0.1 * 3.0);
  const PumpCurve linear{100.0, 5.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(pump_coefficients(0.7, linear).slope, 5.0);
  EXPECT_DOUBLE_EQ(pump_coefficients(70.0, linear).slope, 5.0);
  EXPECT_THROW(pump_coefficients(0.0, c), DomainError);
}

TEST(PipeCoefficient, InterpolatesTheFrictionLaw)
{
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> q(-1000.0, 1000.0), r(1e-6, 5.0), mu(1.8, 2.0);
  for (int i = 0; i < 5000; ++i) {
    const HeadLossModel m{r(rng), mu(rng)};
    const double x = q(rng);
    const double exact = pipe_headloss(x, m);
    EXPECT_NEAR(x + pipe_coefficient(x, m), exact, 1e-12 * std::max(std::abs(exact), std::abs(x)));
  }
}

TEST(PipeCoefficient, SlopeIsOneNotTaylor)
{
  const HeadLossModel m{0.01, 1.852};
  const double c = pipe_coefficient(50.0, m);
  // Linear row h = q + c evaluated at two flows has unit slope.
  EXPECT_DOUBLE_EQ(((60.0 + c) - (40.0 + c)) / 20.0, 1.0);
  const double taylor = m.exponent * m.resistance * std::pow(50.0, m.exponent - 1.0);
  EXPECT_GT(std::abs(taylor - 1.0), 1e-3);
}

TEST(UpdateCoefficients, ThreeNodeElementwise)
{
  const auto net = fixtures::three_node();
  auto s = StateVector::zeros(net);
  s.flow(0, 0) = 238.538;
  s.flow(0, 1) = 38.528;
  const auto c = update_coefficients(net, s, {});
  ASSERT_EQ(c.pipe.size(), 2u);
  const double r23 = 2.4e-3, r34 = 9.8e-3;
  EXPECT_NEAR(c.pipe[0], 238.538 * (r23 * std::pow(238.538, 0.852) - 1.0), 1e-12);
  EXPECT_NEAR(c.pipe[1], 38.528 * (r34 * std::pow(38.528, 0.852) - 1.0), 1e-12);
  EXPECT_TRUE(c.pump_slope.empty());
}

TEST(UpdateCoefficients, UnitResistanceGivesZeroConstants)
{
  const Network net({Junction::make("J", 0, 0)}, {{"R", 10}}, {},
                    {Pipe::with_resistance("A", "R", "J", 1.0, 1.852), Pipe::with_resistance("B", "R", "J", 1.0, 2.0)}, {});
  auto s = StateVector::zeros(net);
  s.flow(0, 0) = 1.0;
  s.flow(0, 1) = 1.0;
  for (double v : update_coefficients(net, s, {}).pipe) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(UpdateCoefficients, PumpFlowIsClamped)
{
  const auto net = fixtures::net8();
  auto s = initial_state(net);
  const auto pump = net.pump_offset();
  s.flow(0, pump) = -5.0;
  const auto c = update_coefficients(net, s, {});
  const auto& curve = net.pumps()[0].curve;
  EXPECT_DOUBLE_EQ(c.pump_slope[0], pump_coefficients(kPumpFlowFloor, curve).slope);
  EXPECT_DOUBLE_EQ(c.pump_intercept[0], -curve.shutoff_head);
}

TEST(UpdateCoefficients, IndependentOfBase)
{
  const auto net = fixtures::net8();
  auto s = initial_state(net);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> q(1.0, 800.0);
  for (std::size_t l = 0; l < net.link_count(); ++l) s.flow(0, l) = q(rng);
  EXPECT_EQ(update_coefficients(net, s, {1.001}), update_coefficients(net, s, {1.5}));
  EXPECT_THROW(update_coefficients(net, s, {1.0}), ContractError);
}

TEST(GpEquivalence, ConsistentAndPerturbed)
{
  const HeadLossModel m{0.0024, 1.852};
  const double q = 120.0;
  const double hj = 740.0;
  const double hi = hj + q + pipe_coefficient(q, m);
  EXPECT_TRUE(gp_linear_equivalence(q, hi, hj, m, {1.001}));
  EXPECT_TRUE(gp_linear_equivalence(q, hi, hj, m, {1.5}));
  EXPECT_FALSE(gp_linear_equivalence(q, hi + 1.0, hj, m, {1.001}));

  const PumpCurve c{200.0, 1.4e-4, 2.0, 1.0};
  const double qp = 400.0;
  const double gain = pump_headgain(qp, c);
  EXPECT_TRUE(gp_linear_equivalence(qp, 700.0 + gain, 700.0, c, {1.001}));
  EXPECT_FALSE(gp_linear_equivalence(qp, 701.0 + gain, 700.0, c, {1.001}));
}

TEST(GpEquivalence, RandomSamples)
{
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> q(-500.0, 500.0), r(1e-5, 1e-1), mu(1.8, 2.0), h(0.0, 1000.0);
  for (int i = 0; i < 500; ++i) {
    const HeadLossModel m{r(rng), mu(rng)};
    const double x = q(rng), hj = h(rng);
    const double hi = hj + x + pipe_coefficient(x, m);
    EXPECT_TRUE(gp_linear_equivalence(x, hi, hj, m, {1.001}));
  }
}
