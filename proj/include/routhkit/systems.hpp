#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Cholesky>

#include "bundle.hpp"
#include "common.hpp"
#include "lagrangian.hpp"
#include "lie.hpp"
#include "poly.hpp"
#include "routh.hpp"

namespace routhkit {

namespace detail {

inline bool positive_definite(const MatrixXd & m)
{
  if (!m.isApprox(m.transpose(), 1e-12)) { return false; }
  Eigen::LLT<MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// classical Abelian system

/**
 * L = ½ k_ij ẋ^i ẋ^j + k_ia ẋ^i θ̇^a + ½ k_ab θ̇^a θ̇^b − V(x) on S × ℝ^m,
 * optionally plus quartic (|ẋ|² + |θ̇|²)².
 */
struct ClassicalSpec
{
  int n{0};
  int m{0};
  PolyMatrix k_base;   ///< n×n
  PolyMatrix k_mixed;  ///< n×m
  PolyMatrix k_group;  ///< m×m
  PolyMatrix potential;  ///< 1×1
  double quartic{0.0};
  /// Use Λ = 0 instead of the mechanical connection Λ^a_i = k^{ab} k_ib.
  bool trivial_connection{false};
};

inline void validate(const ClassicalSpec & s)
{
  require(s.n > 0 && s.m > 0, ErrorKind::Spec, "classical: dimensions must be positive");
  require(s.k_base.rows == s.n && s.k_base.cols == s.n && s.k_base.n == s.n, ErrorKind::Spec,
    "classical: k_base must be n x n in n variables");
  require(s.k_mixed.rows == s.n && s.k_mixed.cols == s.m && s.k_mixed.n == s.n, ErrorKind::Spec,
    "classical: k_mixed must be n x m in n variables");
  require(s.k_group.rows == s.m && s.k_group.cols == s.m && s.k_group.n == s.n, ErrorKind::Spec,
    "classical: k_group must be m x m in n variables");
  require(s.potential.rows == 1 && s.potential.cols == 1 && s.potential.n == s.n, ErrorKind::Spec,
    "classical: potential must be scalar in n variables");
  const VectorXd x0 = VectorXd::Zero(s.n);
  MatrixXd block(s.n + s.m, s.n + s.m);
  block << s.k_base(x0), s.k_mixed(x0), s.k_mixed(x0).transpose(), s.k_group(x0);
  require(detail::positive_definite(s.k_group(x0)), ErrorKind::Spec, "classical: k_ab is singular or indefinite");
  require(detail::positive_definite(block), ErrorKind::Spec, "classical: kinetic matrix is not positive definite");
}

inline LagrangianSystem make_classical(const ClassicalSpec & spec)
{
  validate(spec);
  const int n = spec.n, m = spec.m;
  GroupChart group = abelian_chart(m);
  BundleConnection conn;
  if (spec.trivial_connection) {
    conn = trivial_connection(n, group);
  } else {
    const PolyMatrix kg = spec.k_group, km = spec.k_mixed;
    conn = make_connection(n, group, MatrixFunction::generic([kg, km, n](const auto & q) {
      using T        = typename std::decay_t<decltype(q)>::Scalar;
      const Vec<T> x = q.head(n);
      return solve_dense<T>(kg(x), Mat<T>(km(x).transpose()));
    }));
  }
  const ClassicalSpec s = spec;
  LagrangianSystem sys;
  sys.name       = "classical";
  sys.connection = conn;
  sys.lagrangian = lagrangian_from_coordinates(conn, [s](const auto & x, const auto &, const auto & xd, const auto & td) {
    using T      = typename std::decay_t<decltype(x)>::Scalar;
    T kin        = T(0.5) * xd.dot(s.k_base(x) * xd) + xd.dot(s.k_mixed(x) * td) + T(0.5) * td.dot(s.k_group(x) * td);
    const T pot  = s.potential(x)(0, 0);
    T out        = kin - pot;
    if (s.quartic != 0.0) {
      const T r2 = xd.squaredNorm() + td.squaredNorm();
      out += T(s.quartic) * r2 * r2;
    }
    return out;
  });
  sys.simple_mechanical = spec.quartic == 0.0 && !spec.trivial_connection;
  return sys;
}

/// Packaged 2 + 1 instance with nonconstant k_ia and curvature.
inline ClassicalSpec classical_demo_spec()
{
  ClassicalSpec s;
  s.n       = 2;
  s.m       = 1;
  s.k_base  = PolyMatrix::constant(MatrixXd::Identity(2, 2), 2);
  s.k_mixed = PolyMatrix(2, 1, 2);
  s.k_mixed.add_linear(1, MatrixXd{{0.5}, {0.0}});   // k_1a = 0.5 x2
  s.k_mixed.add_linear(0, MatrixXd{{0.0}, {-0.5}});  // k_2a = -0.5 x1
  s.k_group = PolyMatrix::constant(MatrixXd::Identity(1, 1), 2);
  s.k_group.add_product(0, 0, MatrixXd::Constant(1, 1, 0.25));  // + 0.25 x1²
  s.k_group.add_product(1, 1, MatrixXd::Constant(1, 1, 0.25));  // + 0.25 x2²
  s.potential = PolyMatrix(1, 1, 2);
  s.potential.add_product(0, 0, MatrixXd::Constant(1, 1, 0.5));
  s.potential.add_product(1, 1, MatrixXd::Constant(1, 1, 0.5));
  return s;
}

// ---------------------------------------------------------------------------
// simple mechanical systems and Wong

/**
 * L = ½ g_ij(x) v^i v^j + ½ I_ab(x) w^a w^b − V(x), with w = 𝒜⁻¹ v_group the
 * body velocities, on S × G with the connection X_i = ∂_i − γ^a_i(x) Ê_a.
 * Then g_ia = 0, so this connection is the mechanical one.
 */
struct SimpleMechanicalSpec
{
  int n{0};
  GroupChart chart;
  PolyMatrix base_metric;  ///< n×n
  PolyMatrix inertia;      ///< m×m, body frame
  PolyMatrix gauge;        ///< m×n, γ^a_i
  PolyMatrix potential;    ///< 1×1
};

inline LagrangianSystem make_simple_mechanical(const SimpleMechanicalSpec & spec)
{
  const int n = spec.n, m = spec.chart.dim();
  require(n > 0, ErrorKind::Spec, "simple mechanical: base dimension must be positive");
  require(spec.base_metric.rows == n && spec.base_metric.cols == n, ErrorKind::Spec, "simple mechanical: metric size");
  require(spec.inertia.rows == m && spec.inertia.cols == m, ErrorKind::Spec, "simple mechanical: inertia size");
  require(spec.gauge.rows == m && spec.gauge.cols == n, ErrorKind::Spec, "simple mechanical: gauge size");
  const VectorXd x0 = VectorXd::Zero(n);
  require(detail::positive_definite(spec.base_metric(x0)), ErrorKind::Spec, "simple mechanical: metric not positive definite");
  require(detail::positive_definite(spec.inertia(x0)), ErrorKind::Spec, "simple mechanical: inertia not positive definite");

  const GroupChart chart = spec.chart;
  const PolyMatrix gamma = spec.gauge;
  BundleConnection conn  = make_connection(n, chart, MatrixFunction::generic([chart, gamma, n, m](const auto & q) {
    using T         = typename std::decay_t<decltype(q)>::Scalar;
    const Vec<T> x  = q.head(n);
    const Vec<T> th = q.tail(m);
    return Mat<T>(chart.fundamental(th) * chart.adjoint(th) * gamma(x));
  }));

  const SimpleMechanicalSpec s = spec;
  LagrangianSystem sys;
  sys.name       = "simple-mechanical";
  sys.connection = conn;
  sys.lagrangian = ScalarFunction::generic([s, n, m](const auto & z) {
    using T         = typename std::decay_t<decltype(z)>::Scalar;
    const Vec<T> x  = z.segment(0, n);
    const Vec<T> th = z.segment(n, m);
    const Vec<T> v  = z.segment(n + m, n);
    const Vec<T> u  = z.segment(2 * n + m, m);
    const Mat<T> w  = solve_dense<T>(s.chart.adjoint(th), Mat<T>(u));
    const Vec<T> wb = w.col(0);
    return T(T(0.5) * v.dot(s.base_metric(x) * v) + T(0.5) * wb.dot(s.inertia(x) * wb) - s.potential(x)(0, 0));
  });
  sys.simple_mechanical = true;
  return sys;
}

/// Geodesic Lagrangian over a Riemannian base with a Yang-Mills potential γ.
struct WongSpec
{
  int n{0};
  PolyMatrix metric;  ///< g_ij(x)
  PolyMatrix gamma;   ///< γ^a_i(x), 3×n
  MatrixXd h;         ///< bi-invariant vertical metric, constant
  LieAlgebra algebra{LieAlgebra::so3()};
};

inline void validate(const WongSpec & w)
{
  require(w.n > 0, ErrorKind::Spec, "wong: base dimension must be positive");
  const int m = w.algebra.dim();
  require(w.metric.rows == w.n && w.metric.cols == w.n && w.metric.n == w.n, ErrorKind::Spec, "wong: metric size");
  require(w.gamma.rows == m && w.gamma.cols == w.n && w.gamma.n == w.n, ErrorKind::Spec, "wong: gauge size");
  require(w.h.rows() == m && w.h.cols() == m, ErrorKind::Spec, "wong: h size");
  require(detail::positive_definite(w.h), ErrorKind::Spec, "wong: h must be symmetric positive definite");
  require(detail::positive_definite(w.metric(VectorXd::Zero(w.n))), ErrorKind::Spec, "wong: metric not positive definite");
  const double scale = std::max(1.0, w.h.lpNorm<Eigen::Infinity>() * std::max(1.0, w.algebra.max_abs()));
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int c = 0; c < m; ++c) {
        double s = 0.0;
        for (int d = 0; d < m; ++d) { s += w.h(a, d) * w.algebra(d, b, c) + w.h(b, d) * w.algebra(d, a, c); }
        require(std::abs(s) <= 1e-12 * scale, ErrorKind::Spec, "wong: h violates h_ad C^d_bc + h_bd C^d_ac = 0");
      }
    }
  }
}

/// Packaged instance: SO(3), h = δ, curved 2D base metric, nonflat gauge field.
inline WongSpec wong_demo_spec()
{
  WongSpec w;
  w.n      = 2;
  w.metric = PolyMatrix::constant(MatrixXd::Identity(2, 2), 2);
  w.metric.add_product(1, 1, MatrixXd{{0.1, 0.0}, {0.0, 0.0}});   // g_11 = 1 + 0.1 x2²
  w.metric.add_product(0, 0, MatrixXd{{0.0, 0.0}, {0.0, 0.1}});   // g_22 = 1 + 0.1 x1²
  w.metric.add_product(0, 1, MatrixXd{{0.0, 0.05}, {0.05, 0.0}});  // g_12 = 0.05 x1 x2
  w.gamma = PolyMatrix(3, 2, 2);
  w.gamma.c0 = MatrixXd{{0.0, 0.0}, {0.0, 0.0}, {0.1, 0.2}};
  w.gamma.add_linear(1, MatrixXd{{0.4, 0.0}, {0.0, 0.0}, {0.0, 0.0}});   // γ^1_1 = 0.4 x2
  w.gamma.add_linear(0, MatrixXd{{0.0, 0.0}, {0.0, -0.3}, {0.0, 0.0}});  // γ^2_2 = -0.3 x1
  w.h = MatrixXd::Identity(3, 3);
  return w;
}

/// The Wong system on S × SO(3) in coset coordinates adapted to E1 (take μ ∥ E1).
inline LagrangianSystem make_wong(const WongSpec & w)
{
  validate(w);
  require(w.algebra.dim() == 3 && (w.algebra.jacobi_defect() == 0.0), ErrorKind::Spec, "wong: only so(3) is packaged");
  const LieAlgebra eps = LieAlgebra::so3();
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        require(w.algebra(a, b, c) == eps(a, b, c), ErrorKind::Spec, "wong: structure constants must be eps_abc");
      }
    }
  }
  SimpleMechanicalSpec s;
  s.n           = w.n;
  s.chart       = so3_coset_chart();
  s.base_metric = w.metric;
  s.inertia     = PolyMatrix::constant(w.h, w.n);
  s.gauge       = w.gamma;
  s.potential   = PolyMatrix(1, 1, w.n);
  LagrangianSystem sys = make_simple_mechanical(s);
  sys.name             = "wong";
  return sys;
}

/// Gauge curvature F^c_ij = ∂_j γ^c_i − ∂_i γ^c_j + C^c_ab γ^a_i γ^b_j; F[c](i, j).
inline std::vector<MatrixXd> wong_curvature(const WongSpec & w, const VectorXd & x)
{
  const int n = w.n, m = w.algebra.dim();
  const MatrixXd gam = w.gamma(x);
  std::vector<MatrixXd> dg(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) { dg[l] = w.gamma.derivative(x, l); }
  std::vector<MatrixXd> F(static_cast<std::size_t>(m), MatrixXd::Zero(n, n));
  for (int c = 0; c < m; ++c) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double s = dg[j](c, i) - dg[i](c, j);
        for (int a = 0; a < m; ++a) {
          for (int b = 0; b < m; ++b) { s += w.algebra(c, a, b) * gam(a, i) * gam(b, j); }
        }
        F[c](i, j) = s;
      }
    }
  }
  return F;
}

/**
 * @brief Wong's equations on (x, ẋ, w).
 *
 * ẍ^i + Γ^i_jk ẋ^j ẋ^k = g^{im} h_bc F^c_lm ẋ^l w^b,
 * ẇ^a + γ^c_j C^a_bc ẋ^j w^b = 0.
 */
inline VectorXd wong_field(const WongSpec & w, const VectorXd & state)
{
  const int n = w.n, m = w.algebra.dim();
  require_size(state.size(), 2 * n + m, "wong_field");
  const VectorXd x = state.segment(0, n), xd = state.segment(n, n), wv = state.segment(2 * n, m);
  const MatrixXd g = w.metric(x);
  std::vector<MatrixXd> dg(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) { dg[l] = w.metric.derivative(x, l); }
  // Γ_m,jk ẋ^j ẋ^k with Γ_m,jk = ½(∂_j g_mk + ∂_k g_mj − ∂_m g_jk)
  VectorXd chris = VectorXd::Zero(n);
  for (int mm = 0; mm < n; ++mm) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        chris[mm] += 0.5 * (dg[j](mm, k) + dg[k](mm, j) - dg[mm](j, k)) * xd[j] * xd[k];
      }
    }
  }
  const auto F      = wong_curvature(w, x);
  const VectorXd hw = w.h * wv;
  VectorXd force    = VectorXd::Zero(n);
  for (int mm = 0; mm < n; ++mm) {
    for (int l = 0; l < n; ++l) {
      for (int c = 0; c < m; ++c) { force[mm] += hw[c] * F[c](l, mm) * xd[l]; }
    }
  }
  Eigen::LLT<MatrixXd> llt(g);
  require(llt.info() == Eigen::Success, ErrorKind::Spec, "wong_field: metric is not positive definite");
  const VectorXd xdd = llt.solve(force - chris);

  const MatrixXd gam = w.gamma(x);
  const VectorXd gx  = gam * xd;
  VectorXd wd        = VectorXd::Zero(m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int c = 0; c < m; ++c) { wd[a] -= gx[c] * w.algebra(a, b, c) * wv[b]; }
    }
  }
  VectorXd out(2 * n + m);
  out << xd, xdd, wd;
  return out;
}

// ---------------------------------------------------------------------------
// SE(2)

/// Parameters of the SE(2) example; the remaining initial data follow from these.
struct Se2Params
{
  double A{0.5};
  double mu{0.3};
  double thetadot0{1.0};
  double x0{0.0};
  double y0{0.0};
  double xdot0{1.0};

  double ydot0() const { return 1.0 - A * thetadot0; }
  double zdot0() const { return mu; }
  double z0() const { return mu * y0 + A * ydot0() + thetadot0; }
};

namespace se2_detail {

template<class T>
T lagrangian(const T & xd, const T & yd, const T & zd, const T & th, const T & thd, double A)
{
  using std::cos;
  using std::sin;
  return T(0.5) * (xd * xd + yd * yd + zd * zd + thd * thd) + T(A) * (sin(th) * zd + cos(th) * yd) * thd;
}

}  // namespace se2_detail

/// SE(2) example in the original basis {e_a} and coordinates (y, z, θ).
inline LagrangianSystem make_se2_original(double A)
{
  require(std::abs(A * A - 1.0) > 1e-12, ErrorKind::Regularity, "se2: the system is singular for A^2 = 1");
  const BundleConnection conn = trivial_connection(1, se2_chart());
  LagrangianSystem sys;
  sys.name       = "se2-original";
  sys.connection = conn;
  sys.lagrangian = lagrangian_from_coordinates(conn, [A](const auto & x, const auto & th, const auto & xd, const auto & td) {
    (void)x;
    return se2_detail::lagrangian(xd[0], td[0], td[1], th[2], td[2], A);
  });
  sys.simple_mechanical = true;
  return sys;
}

/// Basis change to E1 = e1 + μ e2, E2 = e2, E3 = e3.
inline MatrixXd se2_adapted_basis(double mu)
{
  return MatrixXd{{1.0, 0.0, 0.0}, {mu, 1.0, 0.0}, {0.0, 0.0, 1.0}};
}

/// Coordinates (y', z', θ) = (y, z − μ y, θ).
inline MatrixXd se2_adapted_coordinates(double mu)
{
  return MatrixXd{{1.0, 0.0, 0.0}, {-mu, 1.0, 0.0}, {0.0, 0.0, 1.0}};
}

inline GroupChart se2_adapted_chart(double mu)
{
  return linear_adapted_chart(se2_chart(), se2_adapted_basis(mu), se2_adapted_coordinates(mu), "SE2-adapted");
}

struct Se2Model
{
  Se2Params params;
  LagrangianSystem system;  ///< adapted basis and coordinates
  MomentumLevel level;

  /// (x, y, z, θ)(t) in the original coordinates.
  Eigen::Vector4d closed_form(double t) const
  {
    const auto & p  = params;
    const double wt = p.thetadot0 * t;
    return {p.xdot0 * t + p.x0, -p.A * std::sin(wt) + (p.ydot0() + p.A * p.thetadot0) * t + p.y0,
      p.A * std::cos(wt) + p.zdot0() * t + p.z0() - p.A, wt};
  }

  /// (z', θ)(t) on the reduced space.
  Eigen::Vector2d reduced_closed_form(double t) const
  {
    const auto & p  = params;
    const double wt = p.thetadot0 * t;
    return {p.A * std::cos(wt) + p.A * p.mu * std::sin(wt) + (1.0 - p.A * p.A) * p.thetadot0, wt};
  }

  double lift_y(double t) const { return -params.A * std::sin(params.thetadot0 * t) + params.y0; }
  double development_y(double t) const { return t; }
  double reconstructed_y(double t) const { return lift_y(t) + t; }

  /// Full state in the adapted chart from original coordinates and velocities.
  FullState state_from_original(double x, double y, double z, double th, double xd, double yd, double zd,
    double thd) const
  {
    const double mu = params.mu;
    return to_quasi_velocities(system.connection, VectorXd{{x}}, VectorXd{{y, z - mu * y, th}}, VectorXd{{xd}},
      VectorXd{{yd, zd - mu * yd, thd}});
  }

  FullState initial_state() const
  {
    const auto & p = params;
    return state_from_original(p.x0, p.y0, p.z0(), 0.0, p.xdot0, p.ydot0(), p.zdot0(), p.thetadot0);
  }

  /// (x, y, z, θ) from a packed adapted-chart state.
  Eigen::Vector4d original_coordinates(const VectorXd & z) const
  {
    return {z[0], z[1], z[2] + params.mu * z[1], z[3]};
  }
};

inline Se2Model make_se2(const Se2Params & p)
{
  require(std::abs(p.A * p.A - 1.0) > 1e-12, ErrorKind::Regularity, "se2: the system is singular for A^2 = 1");
  const double A = p.A;
  const BundleConnection conn = trivial_connection(1, se2_adapted_chart(p.mu));
  LagrangianSystem sys;
  sys.name       = "se2";
  sys.connection = conn;
  sys.lagrangian = lagrangian_from_coordinates(conn, [A, mu = p.mu](const auto & x, const auto & th,
                                                        const auto & xd, const auto & td) {
    (void)x;
    // back to original coordinates: y = y', z = z' + μ y', θ = θ
    const auto zd = td[1] + mu * td[0];
    return se2_detail::lagrangian(xd[0], td[0], zd, th[2], td[2], A);
  });
  sys.simple_mechanical = true;
  Se2Model model{p, sys, {}};
  model.level = make_level(model.system, VectorXd{{1.0 + p.mu * p.mu, p.mu, 0.0}});
  return model;
}

inline Se2Model make_se2(double A, double mu)
{
  Se2Params p;
  p.A  = A;
  p.mu = mu;
  return make_se2(p);
}

/**
 * Non-simple test system on ℝ² × SE(2): the SE(2) Lagrangian plus invariant
 * couplings of (ẋ1, ẋ2) to the body velocity of (y, z), a quartic term and a
 * confining potential. Adapted basis and coordinates as in make_se2.
 */
inline LagrangianSystem make_se2_coupled(double A, double mu, double kappa, double quartic)
{
  require(std::abs(A * A - 1.0) > 1e-12, ErrorKind::Regularity, "se2: the system is singular for A^2 = 1");
  const BundleConnection conn = trivial_connection(2, se2_adapted_chart(mu));
  LagrangianSystem sys;
  sys.name       = "se2-coupled";
  sys.connection = conn;
  sys.lagrangian = lagrangian_from_coordinates(conn, [A, mu, kappa, quartic](const auto & x, const auto & th,
                                                        const auto & xd, const auto & td) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    using std::cos;
    using std::sin;
    const T yd = td[0], zd = td[1] + mu * td[0], thd = td[2];
    const T c = cos(th[2]), s = sin(th[2]);
    const T bu = c * yd + s * zd, bv = -s * yd + c * zd;  // body-frame translation velocity
    T out = se2_detail::lagrangian(xd[0], yd, zd, th[2], thd, A) + T(0.5) * xd[1] * xd[1];
    out += T(kappa) * (xd[0] * bu + xd[1] * bv);
    const T r2 = xd.squaredNorm() + bu * bu + bv * bv + thd * thd;
    out += T(quartic) * r2 * r2;
    out -= T(0.1) * x.squaredNorm();
    return out;
  });
  return sys;
}

}  // namespace routhkit
