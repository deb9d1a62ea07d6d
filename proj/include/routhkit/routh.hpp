#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bundle.hpp"
#include "common.hpp"
#include "integrate.hpp"
#include "lagrangian.hpp"
#include "lie.hpp"

namespace routhkit {

/**
 * @brief Momentum level N_μ for a system whose group chart is already adapted to μ.
 *
 * The first k basis vectors of the working basis span 𝔤_μ, and the
 * coordinates θ^A (A < k) are the ones moved by G_μ.
 */
struct MomentumLevel
{
  VectorXd mu;
  IsotropySplit isotropy;
  int k{0};
  double solver_tol{1e-12};
  int max_newton_iters{50};
  /// Max-norm distance from μ accepted by operations that require a state on N_μ.
  double domain_tol{1e-6};

  int dim_A() const { return k; }
  int dim_alpha() const { return static_cast<int>(mu.size()) - k; }
};

/**
 * @brief Build the level for μ given in the system's working basis.
 *
 * Checks that the working basis is adapted: the isotropy algebra is spanned
 * by the first k basis vectors, C^γ_AB = 0, and Ẽ_A does not move θ^α.
 */
inline MomentumLevel make_level(const LagrangianSystem & sys, const VectorXd & mu, double tol = 1e-10)
{
  const int m = sys.m();
  require_size(mu.size(), m, "make_level: mu");
  const LieAlgebra & alg = sys.connection.group.algebra;
  MomentumLevel lvl;
  lvl.mu       = mu;
  lvl.isotropy = isotropy_subalgebra(alg, mu, tol);
  lvl.k        = lvl.isotropy.dim_A();

  const double scale = std::max(1.0, alg.max_abs() * mu.lpNorm<Eigen::Infinity>());
  const MatrixXd M   = coadjoint_condition(alg, mu);
  if (lvl.k > 0) {
    require(M.leftCols(lvl.k).lpNorm<Eigen::Infinity>() <= 10 * tol * scale, ErrorKind::Spec,
      "group chart is not adapted to mu: the leading basis vectors do not span the isotropy algebra");
  }
  for (int g = lvl.k; g < m; ++g) {
    for (int A = 0; A < lvl.k; ++A) {
      for (int B = 0; B < lvl.k; ++B) {
        require(std::abs(alg(g, A, B)) <= 10 * tol * std::max(1.0, alg.max_abs()), ErrorKind::Spec,
          "group chart is not adapted to mu: isotropy brackets leave the isotropy algebra");
      }
    }
  }
  const MatrixXd K0 = sys.connection.group.K(sys.connection.group.identity);
  if (lvl.k > 0 && lvl.k < m) {
    require(K0.bottomLeftCorner(m - lvl.k, lvl.k).lpNorm<Eigen::Infinity>() <= 1e-12, ErrorKind::Spec,
      "group chart is not adapted to mu: isotropy fields move the coset coordinates");
  }
  return lvl;
}

/// Point of N_μ / G_μ: (x, θ^α, v^i).
struct ReducedState
{
  VectorXd x;
  VectorXd theta_alpha;
  VectorXd v_base;

  VectorXd packed() const { return concat({&x, &theta_alpha, &v_base}); }
  static ReducedState unpack(const VectorXd & r, int n, int nalpha)
  {
    require_size(r.size(), 2 * n + nalpha, "ReducedState::unpack");
    return {r.segment(0, n), r.segment(n, nalpha), r.segment(n + nalpha, n)};
  }
};

/// Momentum p_a and group Hessian block g_ab at a packed state.
inline std::pair<VectorXd, MatrixXd> group_block(const LagrangianSystem & sys, const VectorXd & z)
{
  const int n = sys.n(), m = sys.m(), N = n + m;
  VectorXd p(m);
  MatrixXd g(m, m);
  for (int a = 0; a < m; ++a) {
    const VectorXd ea = unit(2 * N, N + n + a);
    for (int b = a; b < m; ++b) {
      const Derivatives d = derivatives(sys.lagrangian, z, ea, unit(2 * N, N + n + b), sys.fd);
      g(a, b) = g(b, a) = d.dab;
      if (a == b) { p[a] = d.da; }
    }
  }
  return {p, g};
}

/**
 * @brief The functions ι^a: group quasi-velocities with p_a = μ_a.
 *
 * Newton iteration with Jacobian (g_ab), seeded at zero or at warm.
 */
inline VectorXd solve_level_set(const LagrangianSystem & sys, const MomentumLevel & level, const VectorXd & x,
  const VectorXd & theta, const VectorXd & v_base, const VectorXd * warm = nullptr)
{
  const int n = sys.n(), m = sys.m();
  require_size(x.size(), n, "solve_level_set: x");
  require_size(theta.size(), m, "solve_level_set: theta");
  require_size(v_base.size(), n, "solve_level_set: v_base");
  VectorXd u = (warm && warm->size() == m && warm->allFinite()) ? *warm : VectorXd::Zero(m);
  const double tol = level.solver_tol * std::max(1.0, level.mu.lpNorm<Eigen::Infinity>());
  VectorXd z(2 * (n + m));
  z << x, theta, v_base, u;
  double res = 0.0;
  for (int it = 0; it <= level.max_newton_iters; ++it) {
    z.tail(m)      = u;
    auto [p, g]    = group_block(sys, z);
    const VectorXd r = p - level.mu;
    res              = r.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(res)) { throw Error(ErrorKind::Evaluation, "solve_level_set: non-finite momentum"); }
    if (res <= tol) { return u; }
    if (it == level.max_newton_iters) { break; }
    u -= checked_solve(g, r, sys.regularity_tol, ErrorKind::Regularity, "solve_level_set: group Hessian");
  }
  throw Error(ErrorKind::LevelSet,
    "solve_level_set: Newton iteration did not converge (residual " + std::to_string(res) + ")");
}

inline FullState level_state(const LagrangianSystem & sys, const MomentumLevel & level, const VectorXd & x,
  const VectorXd & theta, const VectorXd & v_base, const VectorXd * warm = nullptr)
{
  return {x, theta, v_base, solve_level_set(sys, level, x, theta, v_base, warm)};
}

/// ℛ = L − v^a p_a.
inline double routhian(const LagrangianSystem & sys, const FullState & s)
{
  return sys.L(s) - s.v_group.dot(momentum(sys, s));
}

inline void check_on_level(const LagrangianSystem & sys, const MomentumLevel & level, const FullState & s,
  const char * what)
{
  const double err = (momentum(sys, s) - level.mu).lpNorm<Eigen::Infinity>();
  if (!(err <= level.domain_tol)) {
    throw Error(ErrorKind::Domain,
      std::string(what) + ": state is off the momentum level set (|p - mu| = " + std::to_string(err) + ")");
  }
}

/// B(i, a) = B^a_i, C(b, a) = C^b_a, A(i, b) = A^b_i.
struct BarredCoefficients
{
  MatrixXd B;
  MatrixXd C;
  MatrixXd A;
};

inline BarredCoefficients barred_coefficients(const LagrangianSystem & sys, const FullState & s)
{
  const int n = sys.n(), m = sys.m();
  s.check(n, m);
  const VectorXd z           = s.packed();
  const FiberDerivatives fdv = fiber_derivatives(sys, z);
  const HessianBlocks h      = HessianBlocks::split(fdv.H, n);
  const LieAlgebra & alg     = sys.connection.group.algebra;

  BarredCoefficients out;
  out.B = -checked_solve(h.g_ab, h.g_ia.transpose(), sys.regularity_tol, ErrorKind::Regularity,
    "barred_coefficients: group Hessian")
             .transpose();

  MatrixXd Cp(m, m);  // Cp(c, a) = C^d_ac p_d
  for (int c = 0; c < m; ++c) {
    for (int a = 0; a < m; ++a) {
      double acc = 0.0;
      for (int d = 0; d < m; ++d) { acc += alg(d, a, c) * fdv.p[n + d]; }
      Cp(c, a) = acc;
    }
  }
  out.C = checked_solve(h.g_ab, Cp, sys.regularity_tol, ErrorKind::Regularity, "barred_coefficients");

  // X_i^C(p_a) = D_{X_i} p_a − R^c_ij v^j g_ca
  const MatrixXd Lambda = sys.connection.Lambda(s.x, s.theta);
  const Curvature R     = curvature(sys.connection, s.x, s.theta, sys.fd);
  MatrixXd Xp(m, n);
  for (int i = 0; i < n; ++i) {
    VectorXd dq = horizontal_direction(Lambda, i);
    VectorXd Rv(m);
    for (int c = 0; c < m; ++c) { Rv[c] = R[c].row(i).dot(s.v_base); }
    for (int a = 0; a < m; ++a) {
      Xp(a, i) = momentum_transport(sys, z, dq, n + a) - h.g_ab.row(a).dot(Rv);
    }
  }
  out.A = -checked_solve(h.g_ab, Xp, sys.regularity_tol, ErrorKind::Regularity, "barred_coefficients").transpose();
  return out;
}

/// Everything computed while evaluating the reduced field at one point.
struct ReducedEvaluation
{
  FullState full;           ///< (x, θ, v^i, ι^a) at the chosen gauge
  ReducedState derivative;  ///< (ẋ, θ̇^α, v̇^i)
  double reduced_condition{1.0};
};

/**
 * @brief Lagrange-Routh field on N_μ / G_μ.
 *
 * The full state is recovered at θ^A = gauge; ḡ_ij Γ^j is the right-hand
 * side of the generalized Routh equations.
 */
inline ReducedEvaluation reduced_field_eval(const LagrangianSystem & sys, const MomentumLevel & level,
  const ReducedState & r, const VectorXd & gauge, const VectorXd * warm = nullptr)
{
  const int n = sys.n(), m = sys.m(), k = level.k, N = n + m;
  require_size(r.x.size(), n, "reduced_field: x");
  require_size(r.theta_alpha.size(), m - k, "reduced_field: theta_alpha");
  require_size(r.v_base.size(), n, "reduced_field: v_base");
  require_size(gauge.size(), k, "reduced_field: gauge");

  ReducedEvaluation out;
  VectorXd theta(m);
  theta << gauge, r.theta_alpha;
  out.full = level_state(sys, level, r.x, theta, r.v_base, warm);
  const FullState & s = out.full;

  const auto & conn     = sys.connection;
  const VectorXd z      = s.packed();
  const MatrixXd K      = checked_K(conn, theta);
  const MatrixXd Lambda = conn.Lambda(s.x, theta);
  const Curvature R     = curvature(conn, s.x, theta, sys.fd);
  const HessianBlocks h = hessian(sys, s);

  VectorXd qdot(N);
  qdot.head(n) = s.v_base;
  qdot.tail(m) = K * s.v_group - Lambda * s.v_base;

  VectorXd T(N);
  for (int al = 0; al < N; ++al) { T[al] = momentum_transport(sys, z, qdot, al); }
  const VectorXd GT = checked_solve(h.g_ab, T.tail(m), sys.regularity_tol, ErrorKind::Regularity,
    "reduced_field: group Hessian");

  VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    double curv = 0.0;
    for (int a = 0; a < m; ++a) { curv += level.mu[a] * R[a].row(i).dot(s.v_base); }
    rhs[i] = config_derivative(sys, z, horizontal_direction(Lambda, i)) - curv - (T[i] - h.g_ia.row(i).dot(GT));
  }
  const MatrixXd gbar = h.reduced(sys.regularity_tol);
  out.reduced_condition = condition_number(gbar);
  const VectorXd accel  = checked_solve(gbar, rhs, sys.regularity_tol, ErrorKind::Regularity,
    "reduced_field: reduced Hessian");

  out.derivative = {s.v_base, qdot.segment(n + k, m - k), accel};
  return out;
}

inline ReducedState reduced_field(const LagrangianSystem & sys, const MomentumLevel & level, const ReducedState & r,
  const VectorXd & gauge)
{
  return reduced_field_eval(sys, level, r, gauge).derivative;
}

inline ReducedState reduced_field(const LagrangianSystem & sys, const MomentumLevel & level, const ReducedState & r)
{
  const VectorXd gauge = sys.connection.group.identity.head(level.k);
  return reduced_field_eval(sys, level, r, gauge).derivative;
}

/// Reduced field on packed states, warm-starting ι from the previous call.
inline Field reduced_vector_field(const LagrangianSystem & sys, const MomentumLevel & level)
{
  auto warm            = std::make_shared<VectorXd>();
  const VectorXd gauge = sys.connection.group.identity.head(level.k);
  return [sys, level, warm, gauge](double, const VectorXd & y) -> VectorXd {
    const ReducedState r    = ReducedState::unpack(y, sys.n(), level.dim_alpha());
    ReducedEvaluation e     = reduced_field_eval(sys, level, r, gauge, warm->size() ? warm.get() : nullptr);
    *warm                   = e.full.v_group;
    return e.derivative.packed();
  };
}

/// Project a full state on N_μ to reduced coordinates.
inline ReducedState reduce_state(const MomentumLevel & level, const FullState & s)
{
  return {s.x, s.theta.tail(s.theta.size() - level.k), s.v_base};
}

// ---------------------------------------------------------------------------
// generalized Routh equations along sampled trajectories

namespace detail {

/// Time derivative of sampled data at index k: fourth order on uniform interior stencils.
inline VectorXd time_derivative(const std::vector<double> & t, const std::vector<VectorXd> & f, std::size_t k)
{
  const std::size_t N = t.size();
  auto uniform        = [&](std::size_t lo, std::size_t hi) {
    const double h = t[lo + 1] - t[lo];
    for (std::size_t j = lo; j < hi; ++j) {
      if (std::abs((t[j + 1] - t[j]) - h) > 1e-9 * h) { return false; }
    }
    return true;
  };
  if (k >= 2 && k + 2 < N && uniform(k - 2, k + 2)) {
    const double h = t[k + 1] - t[k];
    return (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
  }
  require(k >= 1 && k + 1 < N, ErrorKind::Argument, "time_derivative: endpoint");
  const double h1 = t[k] - t[k - 1], h2 = t[k + 1] - t[k];
  return -h2 / (h1 * (h1 + h2)) * f[k - 1] + (h2 - h1) / (h1 * h2) * f[k] + h1 / (h2 * (h1 + h2)) * f[k + 1];
}

}  // namespace detail

enum class RouthForm {
  Primary,  ///< Γ(X̄^V_i ℛ^μ) − X̄^C_i ℛ^μ + μ_a R^a_ij v^j
  Gamma0    ///< Γ₀(X̄^V_i ℛ^μ) − X̂^C_i ℛ^μ + μ_a (R^a_ij + B^b_i B^c_j C^a_bc) v^j
};

struct RouthResidual
{
  std::vector<double> times;        ///< interior sample times
  std::vector<VectorXd> residuals;  ///< one length-n vector per time
  double max_abs() const
  {
    double m = 0.0;
    for (const auto & r : residuals) { m = std::max(m, r.lpNorm<Eigen::Infinity>()); }
    return m;
  }
};

/**
 * @brief Residuals of the generalized Routh equations along a sampled full trajectory.
 *
 * traj.states are packed full states (x, θ, v^i, v^a) on N_μ. Time
 * derivatives along the flow are taken by finite differences of the samples.
 */
inline RouthResidual generalized_routh_residual(const LagrangianSystem & sys, const MomentumLevel & level,
  const Trajectory & traj, RouthForm form = RouthForm::Primary)
{
  const int n = sys.n(), m = sys.m(), N = n + m;
  require(traj.size() >= 3, ErrorKind::Argument, "generalized_routh_residual: need at least three samples");
  const auto & conn      = sys.connection;
  const LieAlgebra & alg = conn.group.algebra;

  std::vector<VectorXd> F(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const FullState s = FullState::unpack(traj.states[k], n, m);
    check_on_level(sys, level, s, "generalized_routh_residual");
    F[k] = fiber_momentum(sys, traj.states[k]).head(n);
  }

  RouthResidual out;
  for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
    const FullState s     = FullState::unpack(traj.states[k], n, m);
    const VectorXd & z    = traj.states[k];
    const MatrixXd Lambda = conn.Lambda(s.x, s.theta);
    const Curvature R     = curvature(conn, s.x, s.theta, sys.fd);
    const VectorXd dF     = detail::time_derivative(traj.times, F, k);

    VectorXd res(n);
    for (int i = 0; i < n; ++i) {
      double curv = 0.0;
      for (int a = 0; a < m; ++a) { curv += level.mu[a] * R[a].row(i).dot(s.v_base); }
      res[i] = dF[i] - config_derivative(sys, z, horizontal_direction(Lambda, i)) + curv;
    }

    if (form == RouthForm::Gamma0) {
      const MatrixXd K          = checked_K(conn, s.theta);
      const FiberDerivatives fd = fiber_derivatives(sys, z);
      const HessianBlocks h     = HessianBlocks::split(fd.H, n);
      const MatrixXd B = -checked_solve(h.g_ab, h.g_ia.transpose(), sys.regularity_tol, ErrorKind::Regularity,
        "generalized_routh_residual").transpose();
      // Ē^C_a of functions on N_μ in coordinates (x, θ, v) is K^b_a ∂/∂θ^b
      MatrixXd EF(n, m);  // Ē^C_a(p_i ∘ ι)
      VectorXd ER(m);     // Ē^C_a(ℛ^μ)
      for (int a = 0; a < m; ++a) {
        const VectorXd dq = fundamental_direction(K, n, a);
        VectorXd dp(N);
        for (int al = 0; al < N; ++al) { dp[al] = momentum_transport(sys, z, dq, al); }
        const VectorXd corr = h.g_ia * checked_solve(h.g_ab, dp.tail(m), sys.regularity_tol, ErrorKind::Regularity,
          "generalized_routh_residual");
        EF.col(a) = dp.head(n) - corr;
        ER[a]     = config_derivative(sys, z, dq);
      }
      const VectorXd coeff = B.transpose() * s.v_base + s.v_group;  // v^j B^a_j + v^a
      for (int i = 0; i < n; ++i) {
        double bbc = 0.0;
        for (int j = 0; j < n; ++j) {
          for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
              for (int c = 0; c < m; ++c) { bbc += level.mu[a] * B(i, b) * B(j, c) * alg(a, b, c) * s.v_base[j]; }
            }
          }
        }
        // Γ₀(F_i) = Γ(F_i) − coeff^a Ē^C_a(F_i); X̂^C_i ℛ = X̄^C_i ℛ + B^a_i Ē^C_a ℛ
        res[i] += -coeff.dot(EF.row(i)) - B.row(i).dot(ER) + bbc;
      }
    }
    out.times.push_back(traj.times[k]);
    out.residuals.push_back(res);
  }
  return out;
}

}  // namespace routhkit
