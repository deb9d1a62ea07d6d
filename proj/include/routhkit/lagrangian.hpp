#pragma once

#include <string>
#include <utility>

#include "bundle.hpp"
#include "common.hpp"
#include "integrate.hpp"

namespace routhkit {

/**
 * @brief Regular Lagrangian on T(S × G) written in the standard frame.
 *
 * lagrangian takes z = (x, θ, v^i, v^a) stacked, length 2(n + m).
 */
struct LagrangianSystem
{
  std::string name;
  BundleConnection connection;
  ScalarFunction lagrangian;
  /// Reciprocal condition number below which a Hessian counts as singular.
  double regularity_tol{1e-12};
  /// Set by constructors whose Lagrangian is kinetic minus potential with g_ia = 0.
  bool simple_mechanical{false};
  FiniteDifference fd{};

  int n() const { return connection.n(); }
  int m() const { return connection.m(); }
  int fiber_dim() const { return n() + m(); }
  int state_dim() const { return 2 * (n() + m()); }

  double L(const FullState & s) const { return lagrangian(s.packed()); }
};

/**
 * @brief Turn a coordinate Lagrangian Lc(x, θ, ẋ, θ̇) into one in quasi-velocities.
 *
 * Lc must be callable for Vec<double> and Vec<Jet> arguments.
 */
template<class F>
ScalarFunction lagrangian_from_coordinates(const BundleConnection & conn, F Lc)
{
  const int n = conn.n(), m = conn.m();
  const bool jets = conn.group.fundamental.has_jet() && (conn.trivial || conn.lambda.has_jet());
  auto f          = [conn, Lc, n, m](const auto & z) {
    using T          = typename std::decay_t<decltype(z)>::Scalar;
    const Vec<T> x   = z.segment(0, n);
    const Vec<T> th  = z.segment(n, m);
    const Vec<T> v   = z.segment(n + m, n);
    const Vec<T> w   = z.segment(2 * n + m, m);
    const Vec<T> q   = z.segment(0, n + m);
    const Mat<T> K   = conn.group.fundamental(th);
    const Vec<T> thd = K * w - conn.template Lambda<T>(q) * v;
    return T(Lc(x, th, v, thd));
  };
  if (jets) { return ScalarFunction::generic(f); }
  return ScalarFunction([f](const VectorXd & z) { return f(z); });
}

struct HessianBlocks
{
  MatrixXd g_ij;
  MatrixXd g_ia;
  MatrixXd g_ab;

  MatrixXd full() const
  {
    const auto n = g_ij.rows(), m = g_ab.rows();
    MatrixXd H(n + m, n + m);
    H << g_ij, g_ia, g_ia.transpose(), g_ab;
    return H;
  }

  static HessianBlocks split(const MatrixXd & H, int n)
  {
    const auto m = H.rows() - n;
    return {H.topLeftCorner(n, n), H.topRightCorner(n, m), H.bottomRightCorner(m, m)};
  }

  /// ḡ_ij = g_ij − g^{ab} g_ia g_jb
  MatrixXd reduced(double rcond_min = 1e-12) const
  {
    if (g_ab.size() == 0) { return g_ij; }
    return g_ij - g_ia * checked_solve(g_ab, g_ia.transpose(), rcond_min, ErrorKind::Regularity, "group Hessian");
  }
};

/// p_α = ∂L/∂v^α (all n + m fiber components) and the fiber Hessian.
struct FiberDerivatives
{
  double L{0.0};
  VectorXd p;
  MatrixXd H;
};

inline FiberDerivatives fiber_derivatives(const LagrangianSystem & sys, const VectorXd & z)
{
  const int n = sys.n(), m = sys.m(), N = n + m;
  require_size(z.size(), 2 * N, "fiber_derivatives");
  FiberDerivatives out;
  out.p = VectorXd::Zero(N);
  out.H = MatrixXd::Zero(N, N);
  for (int a = 0; a < N; ++a) {
    const VectorXd ea = unit(2 * N, N + a);
    for (int b = a; b < N; ++b) {
      const Derivatives d = derivatives(sys.lagrangian, z, ea, unit(2 * N, N + b), sys.fd);
      out.H(a, b) = out.H(b, a) = d.dab;
      if (b == a) {
        out.p[a] = d.da;
        out.L    = d.value;
      }
    }
  }
  if (!out.H.allFinite() || !out.p.allFinite() || !std::isfinite(out.L)) {
    throw Error(ErrorKind::Evaluation, "non-finite Lagrangian derivatives");
  }
  return out;
}

inline HessianBlocks hessian(const LagrangianSystem & sys, const FullState & s)
{
  s.check(sys.n(), sys.m());
  return HessianBlocks::split(fiber_derivatives(sys, s.packed()).H, sys.n());
}

/// First derivatives ∂L/∂v^α for all fiber directions.
inline VectorXd fiber_momentum(const LagrangianSystem & sys, const VectorXd & z)
{
  const int N = sys.fiber_dim();
  VectorXd p(N);
  for (int a = 0; a < N; ++a) { p[a] = derivatives(sys.lagrangian, z, unit(2 * N, N + a), VectorXd(), sys.fd).da; }
  return p;
}

/// Momentum map p_a = ∂L/∂v^a.
inline VectorXd momentum(const LagrangianSystem & sys, const FullState & s)
{
  s.check(sys.n(), sys.m());
  return fiber_momentum(sys, s.packed()).tail(sys.m());
}

inline double energy(const LagrangianSystem & sys, const FullState & s)
{
  const VectorXd z = s.packed();
  return s.u().dot(fiber_momentum(sys, z)) - sys.lagrangian(z);
}

/// Derivative of L along a direction in q = (x, θ) with velocities frozen.
inline double config_derivative(const LagrangianSystem & sys, const VectorXd & z, const VectorXd & dq)
{
  VectorXd d = VectorXd::Zero(z.size());
  d.head(dq.size()) = dq;
  return derivatives(sys.lagrangian, z, d, VectorXd(), sys.fd).da;
}

/// D_{q̇} p_α: derivative of p_α along q̇ with the quasi-velocities frozen.
inline double momentum_transport(const LagrangianSystem & sys, const VectorXd & z, const VectorXd & qdot, int alpha)
{
  const int N = sys.fiber_dim();
  VectorXd d  = VectorXd::Zero(2 * N);
  d.head(N)   = qdot;
  return derivatives(sys.lagrangian, z, d, unit(2 * N, N + alpha), sys.fd).dab;
}

/// Linear system H u̇ = rhs of the Euler-Lagrange equations in the standard frame.
struct ELSystem
{
  VectorXd qdot;   ///< (ẋ, θ̇)
  VectorXd p;      ///< all fiber momenta
  MatrixXd H;      ///< fiber Hessian
  VectorXd frame;  ///< Z_α^C(L)
  VectorXd transport;  ///< D_{q̇} p_α
  MatrixXd K, Lambda;
  Curvature R;
};

inline ELSystem assemble_el(const LagrangianSystem & sys, const FullState & s)
{
  const int n = sys.n(), m = sys.m(), N = n + m;
  s.check(n, m);
  const auto & conn = sys.connection;
  const LieAlgebra & alg = conn.group.algebra;
  const VectorXd z       = s.packed();

  ELSystem e;
  e.K      = checked_K(conn, s.theta);
  e.Lambda = conn.Lambda(s.x, s.theta);
  e.R      = curvature(conn, s.x, s.theta, sys.fd);
  e.qdot   = VectorXd(N);
  e.qdot.head(n) = s.v_base;
  e.qdot.tail(m) = e.K * s.v_group - e.Lambda * s.v_base;

  const FiberDerivatives fdv = fiber_derivatives(sys, z);
  e.p = fdv.p;
  e.H = fdv.H;

  e.frame = VectorXd(N);
  for (int i = 0; i < n; ++i) {
    double curv = 0.0;
    for (int a = 0; a < m; ++a) { curv += e.p[n + a] * e.R[a].row(i).dot(s.v_base); }
    e.frame[i] = config_derivative(sys, z, horizontal_direction(e.Lambda, i)) - curv;
  }
  for (int a = 0; a < m; ++a) {
    double rot = 0.0;
    for (int b = 0; b < m; ++b) {
      for (int c = 0; c < m; ++c) { rot += alg(b, a, c) * s.v_group[c] * e.p[n + b]; }
    }
    e.frame[n + a] = config_derivative(sys, z, fundamental_direction(e.K, n, a)) + rot;
  }

  e.transport = VectorXd(N);
  for (int al = 0; al < N; ++al) { e.transport[al] = momentum_transport(sys, z, e.qdot, al); }
  return e;
}

/**
 * @brief Euler-Lagrange field in the standard frame.
 *
 * Returns (ẋ, θ̇, v̇^i, v̇^a) as a FullState-shaped tuple.
 */
inline FullState el_field(const LagrangianSystem & sys, const FullState & s)
{
  const int n = sys.n(), m = sys.m();
  const ELSystem e     = assemble_el(sys, s);
  const VectorXd accel = checked_solve(e.H, e.frame - e.transport, sys.regularity_tol, ErrorKind::Regularity,
    "el_field: Hessian");
  return {e.qdot.head(n), e.qdot.tail(m), accel.head(n), accel.tail(m)};
}

/// el_field as an ODE right-hand side on packed states.
inline Field el_vector_field(const LagrangianSystem & sys)
{
  return [sys](double, const VectorXd & z) -> VectorXd {
    return el_field(sys, FullState::unpack(z, sys.n(), sys.m())).packed();
  };
}

}  // namespace routhkit
