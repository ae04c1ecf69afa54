#include <random>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "wdnse/incidence.hpp"
#include "wdnse/network.hpp"

using namespace wdnse;
using wdnse::fixtures::three_node;

TEST(Network, OrdersNodesAndLinksByKind)
{
  const auto net = fixtures::net8();
  EXPECT_EQ(net.junction_count(), 6u);
  EXPECT_EQ(net.node_kind(net.node_index("1")), NodeKind::Reservoir);
  EXPECT_EQ(net.node_kind(net.node_index("8")), NodeKind::Tank);
  EXPECT_EQ(net.link_kind(net.link_index("9")), LinkKind::Pump);
  EXPECT_EQ(net.node_index("8"), net.node_count() - 1);
  EXPECT_FALSE(net.find_node("99").has_value());
  EXPECT_THROW(net.node_index("99"), ValidationError);
}

TEST(Network, DefaultBounds)
{
  const auto net = fixtures::net8();
  const auto j = net.head_bounds(net.node_index("5"));
  EXPECT_DOUBLE_EQ(j.lower, 650.0);
  EXPECT_DOUBLE_EQ(j.upper, 1150.0);
  const auto r = net.head_bounds(net.node_index("1"));
  EXPECT_DOUBLE_EQ(r.lower, 700.0);
  EXPECT_DOUBLE_EQ(r.upper, 700.0);
  const auto t = net.head_bounds(net.node_index("8"));
  EXPECT_DOUBLE_EQ(t.lower, 830.0);
  EXPECT_DOUBLE_EQ(t.upper, 850.0);
  EXPECT_DOUBLE_EQ(net.flow_bounds(net.link_index("1")).lower, -1e4);
  EXPECT_DOUBLE_EQ(net.flow_bounds(net.link_index("9")).lower, 0.0);
}

TEST(Network, RejectsStructuralErrors)
{
  auto pipe = [](std::string id, std::string a, std::string b) { return Pipe::with_resistance(id, a, b, 1.0, 2.0); };
  EXPECT_THROW(Network({Junction::make("J", 0, 0)}, {{"R", 1}}, {}, {pipe("P", "R", "X")}, {}), ValidationError);
  EXPECT_THROW(Network({Junction::make("J", 0, 0)}, {{"J", 1}}, {}, {}, {}), ValidationError);
  EXPECT_THROW(Network({Junction::make("J", 0, 0)}, {{"R", 1}}, {}, {pipe("P", "J", "J")}, {}), ValidationError);
  EXPECT_THROW(Network({Junction::make("J", 0, 0), Junction::make("K", 0, 0)}, {{"R", 1}}, {}, {pipe("P", "R", "J")}, {}),
               ValidationError);
  auto bad = pipe("P", "R", "J");
  bad.exponent = 2.5;
  EXPECT_THROW(Network({Junction::make("J", 0, 0)}, {{"R", 1}}, {}, {bad}, {}), ValidationError);
  auto tank = Tank::make("T", 0, 30, 0, 20, 10);
  EXPECT_THROW(Network({}, {{"R", 1}}, {tank}, {pipe("P", "R", "T")}, {}), ValidationError);
  Pump pump = Pump::make("M", "R", "J", {100.0, 0.1, 2.0, 1.2});
  EXPECT_THROW(Network({Junction::make("J", 0, 0)}, {{"R", 1}}, {}, {}, {pump}), UnsupportedFeature);
}

TEST(Network, DisconnectedErrorNamesTheNode)
{
  auto pipe = Pipe::with_resistance("P", "R", "A", 1.0, 2.0);
  try {
    Network({Junction::make("A", 0, 0), Junction::make("Lonely", 0, 0)}, {{"R", 1}}, {}, {pipe}, {});
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("Lonely"), std::string::npos);
  }
}

TEST(Incidence, ThreeNodeChain)
{
  const auto net = three_node();
  const auto inc = build_incidence(net, {{"2", "4"}, {"2", "3"}});
  ASSERT_EQ(inc.measurement.rows(), 2);
  EXPECT_DOUBLE_EQ(inc.measurement(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(inc.measurement(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(inc.measurement(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(inc.measurement(1, 1), 0.0);
  // Junction 3: pipe 23 flows in, pipe 34 flows out.
  EXPECT_DOUBLE_EQ(inc.mass(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(inc.mass(0, 1), -1.0);
}

TEST(Incidence, ReversedSensorFlipsSigns)
{
  const auto inc = build_incidence(three_node(), {{"4", "2"}});
  EXPECT_DOUBLE_EQ(inc.measurement(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(inc.measurement(0, 1), -1.0);
}

TEST(Incidence, EmptySensorList)
{
  const auto net = fixtures::net8();
  const auto inc = build_incidence(net, {});
  EXPECT_EQ(inc.measurement.rows(), 0);
  EXPECT_EQ(inc.measurement.cols(), static_cast<Eigen::Index>(net.link_count()));
  EXPECT_EQ(inc.mass.rows(), 6);
  EXPECT_EQ(inc.tank.rows(), 1);
}

TEST(Incidence, TankRowsScaleByStepOverArea)
{
  const auto net = fixtures::net8();
  const auto inc = build_incidence(net, {}, 3600.0);
  const auto l = static_cast<Eigen::Index>(net.link_index("8"));
  const double area = net.tanks()[0].area();
  EXPECT_NEAR(inc.tank(0, l), 3600.0 / area * 0.0022280, 1e-15);
}

TEST(Incidence, MassColumnsTouchAtMostTwoJunctions)
{
  const auto net = fixtures::net8();
  const auto inc = build_incidence(net, {});
  for (Eigen::Index l = 0; l < inc.mass.cols(); ++l) {
    int plus = 0, minus = 0;
    for (Eigen::Index j = 0; j < inc.mass.rows(); ++j) {
      plus += inc.mass(j, l) == 1.0;
      minus += inc.mass(j, l) == -1.0;
      EXPECT_TRUE(inc.mass(j, l) == 0.0 || std::abs(inc.mass(j, l)) == 1.0);
    }
    EXPECT_LE(plus, 1);
    EXPECT_LE(minus, 1);
  }
}

TEST(Incidence, PathSumsEqualHeadDifferencesForConsistentHeads)
{
  const auto net = fixtures::net8();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> h(600.0, 900.0);
  std::vector<SensorPair> pairs;
  for (std::size_t a = 0; a < net.node_count(); ++a) {
    for (std::size_t b = 0; b < net.node_count(); ++b) {
      if (a != b) pairs.push_back({net.node_id(a), net.node_id(b)});
    }
  }
  const auto inc = build_incidence(net, pairs);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd heads(static_cast<Eigen::Index>(net.node_count()));
    for (auto& v : heads) v = h(rng);
    Eigen::VectorXd dh(static_cast<Eigen::Index>(net.link_count()));
    for (std::size_t l = 0; l < net.link_count(); ++l) {
      dh[static_cast<Eigen::Index>(l)] = heads[static_cast<Eigen::Index>(net.link_from(l))] - heads[static_cast<Eigen::Index>(net.link_to(l))];
    }
    const Eigen::VectorXd sums = inc.measurement * dh;
    for (std::size_t s = 0; s < pairs.size(); ++s) {
      const double expect = heads[static_cast<Eigen::Index>(net.node_index(pairs[s].from))] -
                            heads[static_cast<Eigen::Index>(net.node_index(pairs[s].to))];
      EXPECT_NEAR(sums[static_cast<Eigen::Index>(s)], expect, 1e-9);
    }
  }
}

TEST(Incidence, RejectsDegenerateSensor)
{
  EXPECT_THROW(build_incidence(three_node(), {{"3", "3"}}), ValidationError);
  EXPECT_THROW(build_incidence(three_node(), {{"3", "9"}}), ValidationError);
}
