#include <gtest/gtest.h>

#include "support.hpp"

using namespace rk_test;

namespace {

void expect_spec_error(const std::function<void()> & f)
{
  try {
    f();
    FAIL() << "expected a spec error";
  } catch (const Error & e) {
    EXPECT_EQ(e.kind(), ErrorKind::Spec) << e.what();
  }
}

}  // namespace

TEST(Classical, DiagonalKineticMatrixHasFlatTrivialConnection)
{
  ClassicalSpec s;
  s.n         = 2;
  s.m         = 2;
  s.k_base    = PolyMatrix::constant(MatrixXd::Identity(2, 2), 2);
  s.k_mixed   = PolyMatrix(2, 2, 2);
  s.k_group   = PolyMatrix::constant(MatrixXd{{2.0, 0.0}, {0.0, 3.0}}, 2);
  s.potential = PolyMatrix(1, 1, 2);
  const LagrangianSystem sys = make_classical(s);
  EXPECT_TRUE(sys.simple_mechanical);
  std::mt19937 rng(71);
  const FullState st = random_state(sys, rng);
  EXPECT_EQ(max_abs(sys.connection.Lambda(st.x, st.theta)), 0.0);
  EXPECT_NEAR(sys.L(st), 0.5 * st.v_base.squaredNorm() + st.v_group[0] * st.v_group[0] + 1.5 * st.v_group[1] * st.v_group[1],
    1e-15);
  const FullState d = el_field(sys, st);
  EXPECT_LT(max_abs(d.v_base), 1e-15);
  EXPECT_LT(max_abs(d.v_group), 1e-15);
}

TEST(Classical, ValidationRejectsBadSpecs)
{
  expect_spec_error([] {
    ClassicalSpec s = classical_demo_spec();
    s.k_mixed       = PolyMatrix(2, 2, 2);
    make_classical(s);
  });
  expect_spec_error([] {
    ClassicalSpec s = classical_demo_spec();
    s.k_group       = PolyMatrix::constant(MatrixXd::Constant(1, 1, -1.0), 2);
    make_classical(s);
  });
  expect_spec_error([] {
    ClassicalSpec s = classical_demo_spec();
    s.k_mixed       = PolyMatrix::constant(MatrixXd{{2.0}, {0.0}}, 2);  // block indefinite
    make_classical(s);
  });
  expect_spec_error([] {
    ClassicalSpec s = classical_demo_spec();
    s.n             = 0;
    make_classical(s);
  });
}

TEST(Classical, QuarticTermMakesTheSystemNonSimple)
{
  ClassicalSpec s = classical_demo_spec();
  s.quartic       = 0.01;
  EXPECT_FALSE(make_classical(s).simple_mechanical);
  EXPECT_TRUE(make_classical(classical_demo_spec()).simple_mechanical);
}

TEST(Se2, InitialDataConstants)
{
  Se2Params p;
  p.A         = 0.4;
  p.mu        = -0.2;
  p.thetadot0 = 1.5;
  p.y0        = 0.3;
  EXPECT_DOUBLE_EQ(p.ydot0(), 1.0 - 0.4 * 1.5);
  EXPECT_DOUBLE_EQ(p.zdot0(), -0.2);
  EXPECT_DOUBLE_EQ(p.z0(), -0.2 * 0.3 + 0.4 * p.ydot0() + 1.5);
  const Se2Model se2 = make_se2(p);
  EXPECT_EQ(se2.level.k, 1);
  const Eigen::Vector4d c0 = se2.closed_form(0.0);
  EXPECT_NEAR(c0[1], p.y0, 1e-15);
  EXPECT_NEAR(c0[2], p.z0(), 1e-15);
  EXPECT_LT(max_abs(VectorXd(momentum(se2.system, se2.initial_state()) - se2.level.mu)), 1e-14);
}

TEST(Se2, HessianDeterminantIsConstant)
{
  for (double A : {0.2, 0.5, 0.9}) {
    const Se2Model se2 = make_se2(A, 0.3);
    std::mt19937 rng(72);
    for (int trial = 0; trial < 100; ++trial) {
      const FullState s = random_state(se2.system, rng, 2.0);
      EXPECT_NEAR(hessian(se2.system, s).full().determinant(), 1.0 - A * A, 1e-12);
    }
  }
}

TEST(Se2, SingularCouplingIsRejected)
{
  for (double A : {1.0, -1.0}) {
    try {
      make_se2(A, 0.3);
      FAIL();
    } catch (const Error & e) {
      EXPECT_EQ(e.kind(), ErrorKind::Regularity);
    }
  }
}

TEST(Se2, ClosedFormSolvesTheFullEquations)
{
  const Se2Model se2 = make_se2(0.5, 0.3);
  const Trajectory tr = rk4(el_vector_field(se2.system), se2.initial_state().packed(), 0.0, 2.0, 1e-3);
  double err = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    err = std::max(err, max_abs(VectorXd(se2.original_coordinates(tr.states[k]) - se2.closed_form(tr.times[k]))));
  }
  EXPECT_LT(err, 1e-10);
}

TEST(Wong, FlatMetricAndZeroGaugeGiveStraightLines)
{
  WongSpec w = wong_demo_spec();
  w.metric   = PolyMatrix::constant(MatrixXd::Identity(2, 2), 2);
  w.gamma    = PolyMatrix(3, 2, 2);
  const LagrangianSystem sys = make_wong(w);
  const FullState s0{VectorXd{{0.1, -0.2}}, VectorXd::Zero(3), VectorXd{{0.5, 0.25}}, VectorXd{{0.3, -0.2, 0.1}}};
  const Trajectory tr = rk4(el_vector_field(sys), s0.packed(), 0.0, 1.0, 1e-2);
  const VectorXd end  = tr.states.back();
  EXPECT_NEAR(end[0], 0.6, 1e-12);
  EXPECT_NEAR(end[1], 0.05, 1e-12);
}

TEST(Wong, ColorChargeNormIsConserved)
{
  const WongSpec w = wong_demo_spec();
  VectorXd y(7);
  y << 0.3, -0.2, 0.2, 0.1, 0.8, -0.3, 0.5;
  const Trajectory tr = rk4([&w](double, const VectorXd & z) { return wong_field(w, z); }, y, 0.0, 5.0, 1e-3);
  double drift = 0.0;
  for (const auto & z : tr.states) { drift = std::max(drift, std::abs(z.tail(3).squaredNorm() - y.tail(3).squaredNorm())); }
  EXPECT_LT(drift, 1e-10);
}

TEST(Wong, RejectsNonInvariantVerticalMetric)
{
  expect_spec_error([] {
    WongSpec w = wong_demo_spec();
    w.h        = MatrixXd{{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 3.0}};
    make_wong(w);
  });
  expect_spec_error([] {
    WongSpec w = wong_demo_spec();
    w.h        = -MatrixXd::Identity(3, 3);
    make_wong(w);
  });
}

TEST(Wong, BundleCurvatureIsAdjointOfGaugeCurvature)
{
  // R^c = 𝒜^c_d F^d, since Λ = K 𝒜 γ
  const WongSpec w           = wong_demo_spec();
  const LagrangianSystem sys = make_wong(w);
  std::mt19937 rng(73);
  for (int trial = 0; trial < 10; ++trial) {
    const VectorXd x = uniform(rng, 2, -1, 1), th = uniform(rng, 3, -1, 1);
    const Curvature R = curvature(sys.connection, x, th);
    const auto F      = wong_curvature(w, x);
    const MatrixXd Ad = sys.connection.group.Ad(th);
    for (int c = 0; c < 3; ++c) {
      MatrixXd want = MatrixXd::Zero(2, 2);
      for (int d = 0; d < 3; ++d) { want += Ad(c, d) * F[d]; }
      EXPECT_LT(max_abs(MatrixXd(R[c] - want)), 1e-12);
    }
  }
}

TEST(Wong, EquationsAgreeWithGenericEulerLagrange)
{
  const WongSpec w           = wong_demo_spec();
  const LagrangianSystem sys = make_wong(w);
  const FullState s0{VectorXd{{0.3, -0.2}}, VectorXd::Zero(3), VectorXd{{0.2, 0.1}}, VectorXd{{0.8, -0.3, 0.5}}};
  const Trajectory full = rk4(el_vector_field(sys), s0.packed(), 0.0, 2.0, 1e-3);
  VectorXd y(7);
  y << s0.x, s0.v_base, s0.v_group;  // at θ = 0 body and spatial charges coincide
  const Trajectory wt = rk4([&w](double, const VectorXd & z) { return wong_field(w, z); }, y, 0.0, 2.0, 1e-3);
  double err = 0.0;
  for (std::size_t k = 0; k < full.size(); ++k) {
    err = std::max(err, max_abs(VectorXd(full.states[k].head(2) - wt.states[k].head(2))));
    err = std::max(err, max_abs(VectorXd(full.states[k].segment(5, 2) - wt.states[k].segment(2, 2))));
  }
  EXPECT_LT(err, 1e-10);
}

TEST(Invariance, LagrangianUnderFiniteGroupAction)
{
  std::mt19937 rng(74);
  for (const auto & sys : {make_se2(0.5, 0.3).system, make_wong(wong_demo_spec()), make_classical(classical_demo_spec()),
         make_se2_coupled(0.5, 0.3, 0.2, 0.01)}) {
    const GroupChart & G = sys.connection.group;
    for (int trial = 0; trial < 20; ++trial) {
      const FullState s = random_state(sys, rng);
      const VectorXd g  = uniform(rng, sys.m(), -0.5, 0.5);
      FullState moved   = s;
      moved.theta       = G.multiply(g, s.theta);
      moved.v_group     = G.Ad(g) * s.v_group;
      EXPECT_NEAR(sys.L(moved), sys.L(s), 1e-12) << sys.name;
    }
  }
}
