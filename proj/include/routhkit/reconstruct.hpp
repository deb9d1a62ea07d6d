#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "bundle.hpp"
#include "common.hpp"
#include "integrate.hpp"
#include "lagrangian.hpp"
#include "lie.hpp"
#include "routh.hpp"

namespace routhkit {

enum class LevelConnectionKind { Mechanical, VerticalLift };

inline const char * to_string(LevelConnectionKind k)
{
  return k == LevelConnectionKind::Mechanical ? "mechanical" : "vertical-lift";
}

/// G_AB_inv = (g_AB)⁻¹, Υ^B_α = G^{BA} g_Aα, Υ^B_i = G^{BA} g_Ai (adapted basis).
struct UpsilonCoefficients
{
  MatrixXd G_AB_inv;       ///< k×k
  MatrixXd upsilon_alpha;  ///< k×(m−k), (B, α)
  MatrixXd upsilon_i;      ///< k×n, (B, i)
};

inline UpsilonCoefficients upsilon_from_hessian(const HessianBlocks & h, int k, double rcond_min)
{
  const auto m = h.g_ab.rows();
  const MatrixXd gAB = h.g_ab.topLeftCorner(k, k);
  UpsilonCoefficients u;
  u.G_AB_inv = checked_solve(gAB, MatrixXd::Identity(k, k), rcond_min, ErrorKind::Regularity,
    "upsilon: isotropy block of the Hessian");
  u.upsilon_alpha = u.G_AB_inv * h.g_ab.topRightCorner(k, m - k);
  u.upsilon_i     = u.G_AB_inv * h.g_ia.leftCols(k).transpose();
  return u;
}

inline UpsilonCoefficients upsilon(const LagrangianSystem & sys, const MomentumLevel & level, const FullState & s)
{
  return upsilon_from_hessian(hessian(sys, s), level.k, sys.regularity_tol);
}

/// Φ^A (per connection kind) and Ψ^α = Ā^α_β ι^β.
struct VerticalPart
{
  VectorXd phi_A;
  VectorXd psi_alpha;
};

inline VectorXd phi_from(const UpsilonCoefficients & ups, const FullState & s, int k, LevelConnectionKind kind)
{
  const auto m = s.v_group.size();
  VectorXd phi = s.v_group.head(k) + ups.upsilon_alpha * s.v_group.tail(m - k);
  if (kind == LevelConnectionKind::Mechanical) { phi += ups.upsilon_i * s.v_base; }
  return phi;
}

inline VerticalPart vertical_part(const LagrangianSystem & sys, const MomentumLevel & level, const FullState & s,
  LevelConnectionKind kind)
{
  check_on_level(sys, level, s, "vertical_part");
  const int m = sys.m(), k = level.k;
  const UpsilonCoefficients ups = upsilon(sys, level, s);
  VerticalPart out;
  out.phi_A = phi_from(ups, s, k, kind);
  if (m > k) {
    const MatrixXd Aab = sys.connection.group.Ad(s.theta).bottomRightCorner(m - k, m - k);
    out.psi_alpha = checked_solve(Aab, s.v_group.tail(m - k), 1e-13, ErrorKind::Chart, "vertical_part: adjoint block");
  } else {
    out.psi_alpha = VectorXd(0);
  }
  return out;
}

/// Result of a reconstruction: states are packed full states (x, θ, v^i, v^a).
struct Reconstruction
{
  Trajectory full;   ///< reconstructed trajectory on N_μ
  Trajectory group;  ///< g(t) in G_μ, full chart coordinates
  Trajectory lift;   ///< horizontal lift, packed full states
};

enum class DevelopmentRule { Connection, LockedInertia };

namespace detail {

/// Reduced trajectory as a C¹ curve, with slopes from the reduced field.
inline HermiteCurve reduced_curve(const LagrangianSystem & sys, const MomentumLevel & level, const Trajectory & red)
{
  require(red.size() >= 2, ErrorKind::Argument, "reconstruct: reduced trajectory needs at least two samples");
  const int n = sys.n(), na = level.dim_alpha();
  const VectorXd gauge = sys.connection.group.identity.head(level.k);
  std::vector<VectorXd> slopes;
  slopes.reserve(red.size());
  VectorXd warm;
  for (const auto & y : red.states) {
    require_size(y.size(), 2 * n + na, "reconstruct: reduced state");
    const ReducedEvaluation e = reduced_field_eval(sys, level, ReducedState::unpack(y, n, na), gauge,
      warm.size() ? &warm : nullptr);
    warm = e.full.v_group;
    slopes.push_back(e.derivative.packed());
  }
  return HermiteCurve(red.times, red.states, slopes);
}

struct LiftPoint
{
  FullState state;
  VectorXd thetadot_A;  ///< horizontal θ̇^A
  VectorXd xi;          ///< generator for the development
};

inline LiftPoint lift_point(const LagrangianSystem & sys, const MomentumLevel & level, const ReducedState & r,
  const VectorXd & theta_A, LevelConnectionKind kind, DevelopmentRule rule, const VectorXd * warm)
{
  const int m = sys.m(), k = level.k;
  VectorXd theta(m);
  theta << theta_A, r.theta_alpha;
  LiftPoint out;
  out.state         = level_state(sys, level, r.x, theta, r.v_base, warm);
  const FullState & s = out.state;
  const auto & conn = sys.connection;
  const MatrixXd K      = checked_K(conn, theta);
  const MatrixXd Lambda = conn.Lambda(r.x, theta);
  const HessianBlocks h = hessian(sys, s);
  const UpsilonCoefficients ups = upsilon_from_hessian(h, k, sys.regularity_tol);

  const VectorXd thetadot = K * s.v_group - Lambda * s.v_base;
  const MatrixXd Kinv     = checked_solve(K, MatrixXd::Identity(m, m), 1e-13, ErrorKind::Chart, "lift: K");
  MatrixXd P(k, m);
  P << MatrixXd::Identity(k, k), ups.upsilon_alpha;
  VectorXd known = VectorXd::Zero(m);
  known.tail(m - k) = thetadot.tail(m - k);
  VectorXd rhs = -P * Kinv * (known + Lambda * s.v_base);
  if (kind == LevelConnectionKind::Mechanical) { rhs -= ups.upsilon_i * s.v_base; }
  const MatrixXd lhs = P * Kinv.leftCols(k);
  out.thetadot_A     = checked_solve(lhs, rhs, 1e-13, ErrorKind::Chart, "lift: horizontality condition");

  if (rule == DevelopmentRule::LockedInertia) {
    out.xi = ups.G_AB_inv * level.mu.head(k);
  } else {
    out.xi = phi_from(ups, s, k, kind);
  }
  return out;
}

inline Reconstruction run(const LagrangianSystem & sys, const MomentumLevel & level, const Trajectory & red,
  const VectorXd & lift_seed, LevelConnectionKind kind, const VectorXd & g0, DevelopmentRule rule)
{
  const int n = sys.n(), m = sys.m(), k = level.k, na = level.dim_alpha();
  const GroupChart & G = sys.connection.group;
  require_size(lift_seed.size(), k, "reconstruct: lift seed");
  require_size(g0.size(), k, "reconstruct: g0");

  const HermiteCurve curve = reduced_curve(sys, level, red);
  auto warm                = std::make_shared<VectorXd>();

  // joint state (θ^A of the lift, full chart coordinates of g ∈ G_μ)
  const Field f = [&](double t, const VectorXd & y) -> VectorXd {
    const ReducedState r = ReducedState::unpack(curve(t), n, na);
    const LiftPoint lp   = lift_point(sys, level, r, y.head(k), kind, rule, warm->size() ? warm.get() : nullptr);
    *warm                = lp.state.v_group;
    const VectorXd g     = y.tail(m);
    G.check_domain(g);
    VectorXd xi_full = VectorXd::Zero(m);
    xi_full.head(k)  = lp.xi;
    VectorXd dy(k + m);
    dy << lp.thetadot_A, G.left_invariant(g) * xi_full;
    return dy;
  };

  VectorXd y0(k + m);
  VectorXd gfull  = G.identity;
  gfull.head(k)   = g0;
  y0 << lift_seed, gfull;
  const Trajectory joint = rk4_on_grid(f, y0, red.times);

  Reconstruction out;
  VectorXd w;
  for (std::size_t j = 0; j < joint.size(); ++j) {
    const double t       = joint.times[j];
    const ReducedState r = ReducedState::unpack(red.states[j], n, na);
    VectorXd theta(m);
    theta << joint.states[j].head(k), r.theta_alpha;
    const FullState lifted = level_state(sys, level, r.x, theta, r.v_base, w.size() ? &w : nullptr);
    w                      = lifted.v_group;
    const VectorXd g       = joint.states[j].tail(m);
    FullState moved        = lifted;
    moved.theta            = G.multiply(g, lifted.theta);
    moved.v_group          = G.Ad(g) * lifted.v_group;
    out.lift.push(t, lifted.packed());
    out.group.push(t, g);
    out.full.push(t, moved.packed());
  }
  return out;
}

}  // namespace detail

/// Horizontal lift of a reduced trajectory (packed reduced states) through θ^A(t0) = seed.
inline Trajectory horizontal_lift(const LagrangianSystem & sys, const MomentumLevel & level, const Trajectory & red,
  const VectorXd & lift_seed_theta_A, LevelConnectionKind kind)
{
  const VectorXd g0 = sys.connection.group.identity.head(level.k);
  return detail::run(sys, level, red, lift_seed_theta_A, kind, g0, DevelopmentRule::Connection).lift;
}

/**
 * @brief Full trajectory from a reduced one: lift, develop ξ = Φ along the lift, act.
 *
 * g0 gives the θ^A coordinates of the initial element of G_μ; the lift starts
 * at θ^A = lift_seed.
 */
inline Reconstruction reconstruct(const LagrangianSystem & sys, const MomentumLevel & level, const Trajectory & red,
  LevelConnectionKind kind, const VectorXd & g0, const VectorXd & lift_seed)
{
  return detail::run(sys, level, red, lift_seed, kind, g0, DevelopmentRule::Connection);
}

inline Reconstruction reconstruct(const LagrangianSystem & sys, const MomentumLevel & level, const Trajectory & red,
  LevelConnectionKind kind)
{
  const VectorXd id = sys.connection.group.identity.head(level.k);
  return reconstruct(sys, level, red, kind, id, id);
}

/// Reconstruction with ξ = I_μ⁻¹ μ, for simple mechanical systems.
inline Reconstruction locked_inertia_reconstruction(const LagrangianSystem & sys, const MomentumLevel & level,
  const Trajectory & red, const VectorXd & g0, const VectorXd & lift_seed)
{
  require(sys.simple_mechanical, ErrorKind::Spec, "locked_inertia_reconstruction: system is not simple mechanical");
  return detail::run(sys, level, red, lift_seed, LevelConnectionKind::Mechanical, g0, DevelopmentRule::LockedInertia);
}

inline Reconstruction locked_inertia_reconstruction(const LagrangianSystem & sys, const MomentumLevel & level,
  const Trajectory & red)
{
  const VectorXd id = sys.connection.group.identity.head(level.k);
  return locked_inertia_reconstruction(sys, level, red, id, id);
}

/// Connection applied to the tangent of a sampled lift (should vanish).
inline std::vector<VectorXd> horizontality_defect(const LagrangianSystem & sys, const MomentumLevel & level,
  const Trajectory & lift, LevelConnectionKind kind)
{
  const int n = sys.n(), m = sys.m(), k = level.k;
  std::vector<VectorXd> thetas;
  for (const auto & z : lift.states) { thetas.push_back(z.segment(n, m)); }
  std::vector<VectorXd> out;
  for (std::size_t j = 1; j + 1 < lift.size(); ++j) {
    const FullState s       = FullState::unpack(lift.states[j], n, m);
    const VectorXd thetadot = routhkit::detail::time_derivative(lift.times, thetas, j);
    const MatrixXd K        = checked_K(sys.connection, s.theta);
    const VectorXd c = K.partialPivLu().solve(thetadot + sys.connection.Lambda(s.x, s.theta) * s.v_base);
    const UpsilonCoefficients ups = upsilon(sys, level, s);
    VectorXd d = c.head(k) + ups.upsilon_alpha * c.tail(m - k);
    if (kind == LevelConnectionKind::Mechanical) { d += ups.upsilon_i * s.v_base; }
    out.push_back(d);
  }
  return out;
}

}  // namespace routhkit
