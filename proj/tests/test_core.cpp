#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace rk_test;

TEST(Jet, ProductAndChainRuleMatchAnalyticDerivatives)
{
  // f(x, y) = sin(x) exp(x y), seeded along (1, 0) and (0, 1)
  const double x = 0.7, y = -0.4;
  const Jet X{x, 1.0, 0.0, 0.0}, Y{y, 0.0, 1.0, 0.0};
  const Jet f = sin(X) * exp(X * Y);
  const double e = std::exp(x * y);
  EXPECT_NEAR(f.v, std::sin(x) * e, 1e-15);
  EXPECT_NEAR(f.a, std::cos(x) * e + std::sin(x) * y * e, 1e-14);
  EXPECT_NEAR(f.b, std::sin(x) * x * e, 1e-14);
  EXPECT_NEAR(f.ab, std::cos(x) * x * e + std::sin(x) * e + std::sin(x) * x * y * e, 1e-14);
}

TEST(Jet, DivisionSqrtAndLog)
{
  const Jet X{2.0, 1.0, 1.0, 0.0};
  const Jet f = log(X) / sqrt(X);  // g(t) = log t / √t along a = b
  const double t = 2.0;
  const double g1 = (1.0 - 0.5 * std::log(t)) / std::pow(t, 1.5);
  const double g2 = (-2.0 + 0.75 * std::log(t)) / std::pow(t, 2.5);
  EXPECT_NEAR(f.a, g1, 1e-14);
  EXPECT_NEAR(f.ab, g2, 1e-14);
}

TEST(Derivatives, JetAndFiniteDifferencePathsAgree)
{
  auto body = [](const auto & z) {
    using T = typename std::decay_t<decltype(z)>::Scalar;
    using std::cos;
    return T(z[0] * z[0] * z[1] + cos(z[1] * z[2]));
  };
  const ScalarFunction with_jet = ScalarFunction::generic(body);
  const ScalarFunction plain([body](const VectorXd & z) { return body(z); });
  const VectorXd z{{0.3, -1.2, 0.8}}, da{{1.0, 0.0, 0.5}}, db{{0.0, 1.0, -1.0}};
  const Derivatives a = derivatives(with_jet, z, da, db);
  const Derivatives b = derivatives(plain, z, da, db);
  EXPECT_NEAR(a.value, b.value, 1e-15);
  EXPECT_NEAR(a.da, b.da, 1e-9);
  EXPECT_NEAR(a.db, b.db, 1e-9);
  EXPECT_NEAR(a.dab, b.dab, 1e-7);
}

TEST(SolveDense, MatchesEigenLuAndRejectsSingular)
{
  std::mt19937 rng(3);
  const MatrixXd A = MatrixXd::Random(4, 4) + 4.0 * MatrixXd::Identity(4, 4);
  const MatrixXd B = MatrixXd::Random(4, 2);
  EXPECT_LT(max_abs(MatrixXd(solve_dense<double>(A, B) - A.partialPivLu().solve(B))), 1e-13);
  MatrixXd S = A;
  S.row(3)   = S.row(1);
  EXPECT_THROW(solve_dense<double>(S, B), Error);
  try {
    checked_solve(S, B, 1e-12, ErrorKind::Regularity, "test");
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.kind(), ErrorKind::Regularity);
  }
}

TEST(Rk4, ConstantFieldStaysPut)
{
  const Trajectory tr = rk4([](double, const VectorXd & y) { return VectorXd(VectorXd::Zero(y.size())); },
    VectorXd{{1.0}}, 0.0, 3.0, 0.1);
  for (const auto & y : tr.states) { EXPECT_EQ(y[0], 1.0); }
}

TEST(Rk4, ExponentialGrowth)
{
  const Trajectory tr = rk4([](double, const VectorXd & y) { return y; }, VectorXd{{1.0}}, 0.0, 1.0, 1e-3);
  EXPECT_DOUBLE_EQ(tr.times.back(), 1.0);
  EXPECT_NEAR(tr.states.back()[0], std::exp(1.0), 1e-10);
}

TEST(Rk4, LastStepIsShortenedOntoFinalTime)
{
  const auto grid = time_grid(0.0, 1.0, 0.3);
  ASSERT_EQ(grid.size(), 5u);
  EXPECT_DOUBLE_EQ(grid.back(), 1.0);
  EXPECT_NEAR(grid[3], 0.9, 1e-15);
  const Trajectory tr = rk4([](double t, const VectorXd &) { return VectorXd{{3.0 * t * t}}; }, VectorXd{{0.0}},
    0.0, 1.0, 0.3);
  EXPECT_NEAR(tr.states.back()[0], 1.0, 1e-14);  // exact for a cubic
}

TEST(Rk4, FourthOrderOnHarmonicOscillator)
{
  const double w = 2.0;
  const Field f  = [w](double, const VectorXd & y) { return VectorXd{{y[1], -w * w * y[0]}}; };
  auto err       = [&](double dt) {
    const Trajectory tr = rk4(f, VectorXd{{1.0, 0.0}}, 0.0, 5.0, dt);
    return std::abs(tr.states.back()[0] - std::cos(w * 5.0));
  };
  const double e1 = err(1e-2), e2 = err(5e-3), e3 = err(2.5e-3);
  EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.2);
  EXPECT_NEAR(std::log2(e2 / e3), 4.0, 0.2);
}

TEST(Rk4, DeterministicBitForBit)
{
  const Field f = [](double t, const VectorXd & y) { return VectorXd{{std::sin(t) * y[1], -y[0] + 0.1 * y[1]}}; };
  const Trajectory a = rk4(f, VectorXd{{0.3, 1.0}}, 0.0, 2.0, 1e-2);
  const Trajectory b = rk4(f, VectorXd{{0.3, 1.0}}, 0.0, 2.0, 1e-2);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a.times[k], b.times[k]);
    EXPECT_TRUE((a.states[k].array() == b.states[k].array()).all());
  }
}

TEST(Rk4, FieldFailureKeepsPartialTrajectory)
{
  const Field f = [](double t, const VectorXd & y) -> VectorXd {
    if (t > 0.5) { throw Error(ErrorKind::Chart, "left the chart"); }
    return y;
  };
  try {
    rk4(f, VectorXd{{1.0}}, 0.0, 1.0, 0.1);
    FAIL();
  } catch (const IntegrationError & e) {
    EXPECT_EQ(e.cause(), ErrorKind::Chart);
    EXPECT_GT(e.partial().size(), 3u);
    EXPECT_LE(e.partial().times.back(), 0.5 + 1e-12);
    EXPECT_GT(e.time(), 0.4);
  }
}

TEST(Rk4, RejectsBadArguments)
{
  const Field f = [](double, const VectorXd & y) { return y; };
  EXPECT_THROW(rk4(f, VectorXd{{1.0}}, 0.0, 1.0, 0.0), Error);
  EXPECT_THROW(rk4(f, VectorXd{{1.0}}, 1.0, 0.0, 0.1), Error);
}

TEST(Hermite, ReproducesCubicsExactly)
{
  auto p  = [](double t) { return 2.0 * t * t * t - t + 0.5; };
  auto dp = [](double t) { return 6.0 * t * t - 1.0; };
  std::vector<double> t{0.0, 0.4, 1.0, 1.3};
  std::vector<VectorXd> y, dy;
  for (double s : t) {
    y.push_back(VectorXd{{p(s)}});
    dy.push_back(VectorXd{{dp(s)}});
  }
  const HermiteCurve c(t, y, dy);
  for (double s : {0.0, 0.1, 0.55, 0.99, 1.2, 1.3}) {
    EXPECT_NEAR(c(s)[0], p(s), 1e-13);
    EXPECT_NEAR(c.derivative(s)[0], dp(s), 1e-12);
  }
}
