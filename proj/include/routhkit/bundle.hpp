#pragma once

#include <utility>
#include <vector>

#include "common.hpp"
#include "lie.hpp"

namespace routhkit {

/**
 * @brief Principal connection on the trivial bundle S × G.
 *
 * lambda takes q = (x, θ) and returns the m×n matrix Λ(a, i), so that the
 * horizontal frame is X_i = ∂/∂x^i − Λ^a_i ∂/∂θ^a.
 */
struct BundleConnection
{
  int base_dim{0};
  GroupChart group;
  MatrixFunction lambda;
  bool trivial{false};

  int n() const { return base_dim; }
  int m() const { return group.dim(); }

  MatrixXd Lambda(const VectorXd & x, const VectorXd & theta) const
  {
    if (trivial) { return MatrixXd::Zero(m(), n()); }
    return lambda(concat({&x, &theta}));
  }

  template<class T>
  Mat<T> Lambda(const Vec<T> & q) const
  {
    if (trivial) { return Mat<T>::Zero(m(), n()); }
    return lambda(q);
  }
};

inline BundleConnection trivial_connection(int n, GroupChart group)
{
  BundleConnection c;
  c.base_dim = n;
  c.group    = std::move(group);
  c.trivial  = true;
  return c;
}

inline BundleConnection make_connection(int n, GroupChart group, MatrixFunction lambda)
{
  BundleConnection c;
  c.base_dim = n;
  c.group    = std::move(group);
  c.lambda   = std::move(lambda);
  return c;
}

/// Point of TM in the standard frame: (x, θ) and quasi-velocities (v^i, v^a).
struct FullState
{
  VectorXd x;
  VectorXd theta;
  VectorXd v_base;
  VectorXd v_group;

  VectorXd q() const { return concat({&x, &theta}); }
  VectorXd u() const { return concat({&v_base, &v_group}); }
  VectorXd packed() const { return concat({&x, &theta, &v_base, &v_group}); }

  static FullState unpack(const VectorXd & z, int n, int m)
  {
    require_size(z.size(), 2 * (n + m), "FullState::unpack");
    return {z.segment(0, n), z.segment(n, m), z.segment(n + m, n), z.segment(2 * n + m, m)};
  }

  void check(int n, int m) const
  {
    require_size(x.size(), n, "FullState.x");
    require_size(theta.size(), m, "FullState.theta");
    require_size(v_base.size(), n, "FullState.v_base");
    require_size(v_group.size(), m, "FullState.v_group");
  }
};

/// Direction of X_i in q = (x, θ) space.
inline VectorXd horizontal_direction(const MatrixXd & Lambda, int i)
{
  const int n = static_cast<int>(Lambda.cols()), m = static_cast<int>(Lambda.rows());
  VectorXd d = VectorXd::Zero(n + m);
  d[i]       = 1.0;
  d.tail(m)  = -Lambda.col(i);
  return d;
}

/// Direction of Ẽ_a in q space.
inline VectorXd fundamental_direction(const MatrixXd & K, int n, int a)
{
  const int m = static_cast<int>(K.rows());
  VectorXd d  = VectorXd::Zero(n + m);
  d.tail(m)   = K.col(a);
  return d;
}

inline MatrixXd checked_K(const BundleConnection & conn, const VectorXd & theta)
{
  conn.group.check_domain(theta);
  MatrixXd K = conn.group.K(theta);
  if (!K.allFinite()) { throw Error(ErrorKind::Chart, "non-finite fundamental-field coefficients"); }
  return K;
}

/// Curvature components, R[a](i, j) with [X_i, X_j] = R^a_ij Ẽ_a.
using Curvature = std::vector<MatrixXd>;

inline Curvature curvature(const BundleConnection & conn, const VectorXd & x, const VectorXd & theta,
  const FiniteDifference & fd = kDefaultFD)
{
  const int n = conn.n(), m = conn.m();
  require_size(x.size(), n, "curvature: x");
  require_size(theta.size(), m, "curvature: theta");
  Curvature R(static_cast<std::size_t>(m), MatrixXd::Zero(n, n));
  if (conn.trivial || n < 2) { return R; }
  const VectorXd q      = concat({&x, &theta});
  const MatrixXd Lambda = conn.lambda(q);
  // XL[i] = X_i(Λ) as an m×n matrix
  std::vector<MatrixXd> XL(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) { XL[i] = directional(conn.lambda, q, horizontal_direction(Lambda, i), fd); }
  MatrixXd br(m, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) { br.col(i * n + j) = -XL[i].col(j) + XL[j].col(i); }
  }
  const MatrixXd K   = checked_K(conn, theta);
  const MatrixXd sol = checked_solve(K, br, 1e-13, ErrorKind::Chart, "curvature: fundamental-field matrix");
  for (int a = 0; a < m; ++a) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) { R[a](i, j) = sol(a, i * n + j); }
    }
  }
  return R;
}

/// v^i = ẋ^i, K v_group = θ̇ + Λ ẋ.
inline FullState to_quasi_velocities(const BundleConnection & conn, const VectorXd & x, const VectorXd & theta,
  const VectorXd & xdot, const VectorXd & thetadot)
{
  const int n = conn.n(), m = conn.m();
  require_size(x.size(), n, "to_quasi_velocities: x");
  require_size(theta.size(), m, "to_quasi_velocities: theta");
  require_size(xdot.size(), n, "to_quasi_velocities: xdot");
  require_size(thetadot.size(), m, "to_quasi_velocities: thetadot");
  const MatrixXd K   = checked_K(conn, theta);
  const VectorXd rhs = thetadot + conn.Lambda(x, theta) * xdot;
  const VectorXd w   = checked_solve(K, rhs, 1e-13, ErrorKind::Chart, "to_quasi_velocities");
  return {x, theta, xdot, w};
}

/// ẋ = v_base, θ̇ = K v_group − Λ v_base.
inline std::pair<VectorXd, VectorXd> from_quasi_velocities(const BundleConnection & conn, const FullState & s)
{
  s.check(conn.n(), conn.m());
  const VectorXd thetadot = conn.group.K(s.theta) * s.v_group - conn.Lambda(s.x, s.theta) * s.v_base;
  return {s.v_base, thetadot};
}

}  // namespace routhkit
