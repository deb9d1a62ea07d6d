#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <routhkit/routhkit.hpp>

namespace rk_test {

using namespace routhkit;

inline VectorXd uniform(std::mt19937 & rng, int n, double lo, double hi)
{
  std::uniform_real_distribution<double> d(lo, hi);
  VectorXd v(n);
  for (int k = 0; k < n; ++k) { v[k] = d(rng); }
  return v;
}

inline double max_abs(const VectorXd & v) { return v.lpNorm<Eigen::Infinity>(); }
inline double max_abs(const MatrixXd & m) { return m.lpNorm<Eigen::Infinity>(); }

/// Max-norm distance between two trajectories sampled on the same grid.
inline double max_distance(const Trajectory & a, const Trajectory & b)
{
  double e = 0.0;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
    e = std::max(e, max_abs(VectorXd(a.states[k] - b.states[k])));
  }
  return e;
}

/// Random state for a packaged system: small configuration and velocities.
inline FullState random_state(const LagrangianSystem & sys, std::mt19937 & rng, double spread = 0.5)
{
  return {uniform(rng, sys.n(), -spread, spread), uniform(rng, sys.m(), -spread, spread),
    uniform(rng, sys.n(), -spread, spread), uniform(rng, sys.m(), -spread, spread)};
}

/// Coordinate accelerations (ẍ, θ̈) from el_field: θ̈ = (D_{θ̇}K) u + K u̇ − (D_{q̇}Λ) v − Λ v̇.
inline VectorXd coordinate_acceleration(const LagrangianSystem & sys, const FullState & s)
{
  const auto & conn    = sys.connection;
  const FullState d    = el_field(sys, s);
  const VectorXd q     = s.q();
  const VectorXd qdot  = concat({&d.x, &d.theta});
  const MatrixXd dK    = directional(conn.group.fundamental, s.theta, d.theta);
  VectorXd thdd        = dK * s.v_group + conn.group.K(s.theta) * d.v_group
                  - conn.Lambda(s.x, s.theta) * d.v_base;
  if (!conn.trivial) { thdd -= directional(conn.lambda, q, qdot) * s.v_base; }
  return concat({&d.v_base, &thdd});
}

}  // namespace rk_test
