#include <gtest/gtest.h>

#include "support.hpp"

using namespace rk_test;

namespace {

constexpr double kA = 0.5, kMu = 0.3;

MomentumLevel coupled_level(const LagrangianSystem & sys)
{
  return make_level(sys, VectorXd{{1.0 + kMu * kMu, kMu, 0.0}});
}

/// Samples of the closed-form SE(2) motion as packed adapted-chart states.
Trajectory se2_closed_form_samples(const Se2Model & se2, double tf, double dt)
{
  const auto & p = se2.params;
  const double w = p.thetadot0;
  Trajectory tr;
  for (double t : time_grid(0.0, tf, dt)) {
    const Eigen::Vector4d c = se2.closed_form(t);
    const double yd = -p.A * w * std::cos(w * t) + p.ydot0() + p.A * w;
    const double zd = -p.A * w * std::sin(w * t) + p.zdot0();
    tr.push(t, se2.state_from_original(c[0], c[1], c[2], c[3], p.xdot0, yd, zd, w).packed());
  }
  return tr;
}

}  // namespace

TEST(Routhian, EqualsLagrangianAtZeroGroupVelocity)
{
  const LagrangianSystem sys = make_se2_coupled(kA, kMu, 0.2, 0.01);
  std::mt19937 rng(41);
  FullState s = random_state(sys, rng);
  s.v_group.setZero();
  EXPECT_DOUBLE_EQ(routhian(sys, s), sys.L(s));
}

TEST(Routhian, SimpleMechanicalOnLevelIsAmendedPotentialForm)
{
  // ℛ^μ = ½ g_ij v^i v^j − ½ μ_a g^{ab} μ_b − V
  std::mt19937 rng(42);
  for (const auto & sys : {make_wong(wong_demo_spec()), make_classical(classical_demo_spec())}) {
    const VectorXd mu  = uniform(rng, sys.m(), -1, 1);
    const MomentumLevel level{mu, {}, 0};
    for (int trial = 0; trial < 10; ++trial) {
      const FullState r = random_state(sys, rng);
      const FullState s = level_state(sys, level, r.x, r.theta, r.v_base);
      const HessianBlocks h = hessian(sys, s);
      FullState rest = s;
      rest.v_base.setZero();
      rest.v_group.setZero();
      const double V    = -sys.L(rest);
      const double want = 0.5 * s.v_base.dot(h.g_ij * s.v_base) - 0.5 * mu.dot(h.g_ab.ldlt().solve(mu)) - V;
      EXPECT_NEAR(routhian(sys, s), want, 1e-12) << sys.name;
    }
  }
}

TEST(LevelSet, WongGroupVelocityIsInverseMetricOfMomentum)
{
  const WongSpec spec        = wong_demo_spec();
  const LagrangianSystem sys = make_wong(spec);
  const MomentumLevel level  = make_level(sys, VectorXd{{0.8, 0.0, 0.0}});
  std::mt19937 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const FullState r = random_state(sys, rng);
    const VectorXd u  = solve_level_set(sys, level, r.x, r.theta, r.v_base);
    EXPECT_LT(max_abs(VectorXd(u - spec.h.ldlt().solve(level.mu))), 1e-12);
  }
}

TEST(LevelSet, ClassicalMomentumRelation)
{
  // with the mechanical connection p = k_group(x) v^a
  const LagrangianSystem sys = make_classical(classical_demo_spec());
  const MomentumLevel level  = make_level(sys, VectorXd{{0.7}});
  std::mt19937 rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const FullState r = random_state(sys, rng, 2.0);
    const VectorXd u  = solve_level_set(sys, level, r.x, r.theta, r.v_base);
    EXPECT_NEAR(u[0], 0.7 / (1.0 + 0.25 * r.x.squaredNorm()), 1e-13);
  }
}

TEST(LevelSet, Se2MatchesLinearSystemFromPrintedHessian)
{
  const Se2Model se2 = make_se2(kA, kMu);
  std::mt19937 rng(45);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd c = uniform(rng, 5, -1.5, 1.5);  // x, y', z', θ, ẋ
    const double y = c[1], z = c[2] + kMu * c[1], th = c[3];
    const double h13 = kA * std::cos(th) + kA * kMu * std::sin(th) - z + kMu * y;
    const double h23 = kA * std::sin(th) + y;
    const double h33 = 1 - 2 * kA * z * std::cos(th) + 2 * kA * y * std::sin(th) + y * y + z * z;
    Eigen::Matrix3d G;
    G << 1 + kMu * kMu, kMu, h13, kMu, 1, h23, h13, h23, h33;
    const Eigen::Vector3d want = G.lu().solve(Eigen::Vector3d(1 + kMu * kMu, kMu, 0.0));
    const VectorXd u = solve_level_set(se2.system, se2.level, c.head(1), c.segment(1, 3), c.tail(1));
    EXPECT_LT(max_abs(VectorXd(u - want)), 1e-12);
  }
}

TEST(LevelSet, NewtonFailureIsReported)
{
  const LagrangianSystem sys = make_se2_coupled(kA, kMu, 0.2, 0.05);
  MomentumLevel level        = coupled_level(sys);
  level.max_newton_iters     = 1;
  try {
    solve_level_set(sys, level, VectorXd::Zero(2), VectorXd::Zero(3), VectorXd{{1.0, 1.0}});
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.kind(), ErrorKind::LevelSet);
  }
}

TEST(Barred, BVanishesForSimpleMechanicalAndCForAbelian)
{
  std::mt19937 rng(46);
  const LagrangianSystem wong = make_wong(wong_demo_spec());
  const LagrangianSystem cls  = make_classical(classical_demo_spec());
  for (int trial = 0; trial < 10; ++trial) {
    EXPECT_LT(max_abs(barred_coefficients(wong, random_state(wong, rng)).B), 1e-13);
    const BarredCoefficients bc = barred_coefficients(cls, random_state(cls, rng));
    EXPECT_LT(max_abs(bc.B), 1e-13);
    EXPECT_EQ(max_abs(bc.C), 0.0);
  }
}

TEST(Barred, VerticalFieldsAnnihilateMomentum)
{
  // X̄^V_i = ∂/∂v^i + B^a_i ∂/∂v^a kills p_a, checked by central differences
  const LagrangianSystem sys = make_se2_coupled(kA, kMu, 0.3, 0.02);
  const int n = 2, m = 3, N = 5;
  std::mt19937 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const FullState s          = random_state(sys, rng);
    const BarredCoefficients b = barred_coefficients(sys, s);
    const HessianBlocks h      = hessian(sys, s);
    EXPECT_LT(max_abs(MatrixXd(h.g_ia + b.B * h.g_ab)), 1e-12);
    EXPECT_GT(max_abs(b.B), 1e-3);
    const VectorXd z = s.packed();
    for (int i = 0; i < n; ++i) {
      VectorXd dir       = VectorXd::Zero(2 * N);
      dir[N + i]         = 1.0;
      dir.tail(m)        = b.B.row(i).transpose();
      const double step  = 1e-5;
      const VectorXd dp  = (fiber_momentum(sys, z + step * dir) - fiber_momentum(sys, z - step * dir)).tail(m) / (2 * step);
      EXPECT_LT(max_abs(dp), 1e-8);
    }
  }
}

TEST(ReducedField, Se2MatchesPrintedEquations)
{
  const Se2Model se2 = make_se2(kA, kMu);
  const double A2    = kA * kA;
  std::mt19937 rng(48);
  for (int trial = 0; trial < 30; ++trial) {
    const VectorXd c   = uniform(rng, 4, -2.0, 2.0);  // x, z', θ, ẋ
    const double zp = c[1], th = c[2], sn = std::sin(th), cs = std::cos(th);
    const ReducedState r{c.head(1), c.segment(1, 2), c.tail(1)};
    const ReducedState d = reduced_field(se2.system, se2.level, r);
    const double zdot = kA / (A2 - 1)
      * (zp * (sn - kMu * cs) - kA * (1 - kMu * kMu) * sn * cs - kMu * kA + 2 * kMu * kA * cs * cs);
    const double thdot = (-zp + kA * cs + kA * kMu * sn) / (A2 - 1);
    EXPECT_NEAR(d.x[0], c[3], 1e-15);
    EXPECT_NEAR(d.theta_alpha[0], zdot, 1e-12);
    EXPECT_NEAR(d.theta_alpha[1], thdot, 1e-12);
    EXPECT_NEAR(d.v_base[0], 0.0, 1e-12);
  }
}

TEST(ReducedField, IndependentOfGauge)
{
  std::mt19937 rng(49);
  const LagrangianSystem cls = make_classical(classical_demo_spec());
  const LagrangianSystem wng = make_wong(wong_demo_spec());
  const LagrangianSystem cpl = make_se2_coupled(kA, kMu, 0.2, 0.01);
  const std::vector<std::pair<LagrangianSystem, MomentumLevel>> cases{
    {cls, make_level(cls, VectorXd{{0.7}})}, {wng, make_level(wng, VectorXd{{0.8, 0.0, 0.0}})},
    {cpl, coupled_level(cpl)}, {make_se2(kA, kMu).system, make_se2(kA, kMu).level}};
  for (const auto & [sys, level] : cases) {
    for (int trial = 0; trial < 50; ++trial) {
      const ReducedState r{uniform(rng, sys.n(), -0.8, 0.8), uniform(rng, level.dim_alpha(), -0.8, 0.8),
        uniform(rng, sys.n(), -0.8, 0.8)};
      const VectorXd a = reduced_field(sys, level, r, VectorXd::Zero(level.k)).packed();
      const VectorXd b = reduced_field(sys, level, r, uniform(rng, level.k, -1.0, 1.0)).packed();
      EXPECT_LT(max_abs(VectorXd(a - b)), 1e-10) << sys.name;
      EXPECT_LT(max_abs(VectorXd(a.head(sys.n()) - r.v_base)), 1e-15);
    }
  }
}

TEST(ReducedField, AgreesWithFullFieldOnTheLevel)
{
  std::mt19937 rng(50);
  const LagrangianSystem cpl = make_se2_coupled(kA, kMu, 0.2, 0.01);
  const LagrangianSystem wng = make_wong(wong_demo_spec());
  const std::vector<std::pair<LagrangianSystem, MomentumLevel>> cases{
    {cpl, coupled_level(cpl)}, {wng, make_level(wng, VectorXd{{0.8, 0.0, 0.0}})}};
  for (const auto & [sys, level] : cases) {
    const int n = sys.n(), k = level.k;
    for (int trial = 0; trial < 20; ++trial) {
      const ReducedState r{uniform(rng, n, -0.8, 0.8), uniform(rng, level.dim_alpha(), -0.8, 0.8),
        uniform(rng, n, -0.8, 0.8)};
      const ReducedEvaluation e = reduced_field_eval(sys, level, r, VectorXd::Zero(k));
      EXPECT_LT(max_abs(VectorXd(momentum(sys, e.full) - level.mu)), 1e-8);
      const FullState d = el_field(sys, e.full);
      EXPECT_LT(max_abs(VectorXd(d.v_base - e.derivative.v_base)), 1e-8) << sys.name;
      EXPECT_LT(max_abs(VectorXd(d.theta.tail(level.dim_alpha()) - e.derivative.theta_alpha)), 1e-8);
    }
  }
}

TEST(ReducedField, RouthianHessianIsReducedHessian)
{
  // ∂²ℛ^μ/∂v^i∂v^j = ḡ_ij, with ℛ^μ differentiated by central differences
  const LagrangianSystem sys = make_se2_coupled(kA, kMu, 0.3, 0.02);
  const MomentumLevel level  = coupled_level(sys);
  std::mt19937 rng(51);
  const FullState r = random_state(sys, rng);
  auto R            = [&](const VectorXd & v) { return routhian(sys, level_state(sys, level, r.x, r.theta, v)); };
  const double h    = 1e-4;
  MatrixXd fd(2, 2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const VectorXd ei = h * unit(2, i), ej = h * unit(2, j);
      fd(i, j) = (R(r.v_base + ei + ej) - R(r.v_base + ei - ej) - R(r.v_base - ei + ej) + R(r.v_base - ei - ej))
        / (4 * h * h);
    }
  }
  const MatrixXd gbar = hessian(sys, level_state(sys, level, r.x, r.theta, r.v_base)).reduced();
  EXPECT_LT(max_abs(MatrixXd(fd - gbar)), 1e-6);
}

TEST(RouthEquations, ClosedFormSe2MotionHasSmallResidual)
{
  const Se2Model se2  = make_se2(kA, kMu);
  const Trajectory tr = se2_closed_form_samples(se2, 3.0, 1e-3);
  EXPECT_LT(generalized_routh_residual(se2.system, se2.level, tr).max_abs(), 1e-6);
  EXPECT_LT(generalized_routh_residual(se2.system, se2.level, tr, RouthForm::Gamma0).max_abs(), 1e-6);
}

TEST(RouthEquations, BothFormsAgreeAlongFullTrajectories)
{
  const LagrangianSystem cpl = make_se2_coupled(kA, kMu, 0.3, 0.02);
  const Se2Model se2         = make_se2(kA, kMu);
  const std::vector<std::pair<LagrangianSystem, MomentumLevel>> cases{
    {cpl, coupled_level(cpl)}, {se2.system, se2.level}};
  for (const auto & [sys, level] : cases) {
    const FullState s0 = level_state(sys, level, VectorXd::Constant(sys.n(), 0.2), VectorXd::Zero(3),
      VectorXd::Constant(sys.n(), 0.5));
    const Trajectory tr = rk4(el_vector_field(sys), s0.packed(), 0.0, 1.0, 1e-3);
    const RouthResidual a = generalized_routh_residual(sys, level, tr);
    const RouthResidual b = generalized_routh_residual(sys, level, tr, RouthForm::Gamma0);
    EXPECT_LT(a.max_abs(), 1e-6) << sys.name;
    double diff = 0.0;
    for (std::size_t k = 0; k < a.residuals.size(); ++k) {
      diff = std::max(diff, max_abs(VectorXd(a.residuals[k] - b.residuals[k])));
    }
    EXPECT_LT(diff, 1e-8) << sys.name;
  }
}

TEST(RouthEquations, OffLevelTrajectoryIsADomainError)
{
  const Se2Model se2 = make_se2(kA, kMu);
  Trajectory tr      = se2_closed_form_samples(se2, 0.01, 1e-3);
  tr.states[3][tr.states[3].size() - 1] += 0.1;
  try {
    generalized_routh_residual(se2.system, se2.level, tr);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}
