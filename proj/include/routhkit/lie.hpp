#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "common.hpp"
#include "integrate.hpp"

namespace routhkit {

/**
 * @brief Finite-dimensional real Lie algebra given by structure constants.
 *
 * [E_a, E_b] = C^c_ab E_c.
 */
class LieAlgebra
{
public:
  LieAlgebra() = default;
  explicit LieAlgebra(int dim) : dim_(dim), c_(static_cast<std::size_t>(dim * dim * dim), 0.0)
  {
    require(dim > 0, ErrorKind::Argument, "LieAlgebra: dimension must be positive");
  }

  int dim() const { return dim_; }

  double operator()(int c, int a, int b) const { return c_[idx(c, a, b)]; }

  /// Set C^c_ab and C^c_ba = -C^c_ab together.
  void set(int c, int a, int b, double value)
  {
    c_[idx(c, a, b)] = value;
    c_[idx(c, b, a)] = -value;
  }

  VectorXd bracket(const VectorXd & xi, const VectorXd & eta) const
  {
    require_size(xi.size(), dim_, "bracket");
    require_size(eta.size(), dim_, "bracket");
    VectorXd out = VectorXd::Zero(dim_);
    for (int c = 0; c < dim_; ++c) {
      for (int a = 0; a < dim_; ++a) {
        for (int b = 0; b < dim_; ++b) { out[c] += (*this)(c, a, b) * xi[a] * eta[b]; }
      }
    }
    return out;
  }

  /// ad_xi as a matrix: (ad_xi)^c_b = C^c_ab xi^a.
  MatrixXd ad(const VectorXd & xi) const
  {
    require_size(xi.size(), dim_, "ad");
    MatrixXd out = MatrixXd::Zero(dim_, dim_);
    for (int c = 0; c < dim_; ++c) {
      for (int b = 0; b < dim_; ++b) {
        for (int a = 0; a < dim_; ++a) { out(c, b) += (*this)(c, a, b) * xi[a]; }
      }
    }
    return out;
  }

  /// Structure constants in the basis E'_a = P(b, a) E_b.
  LieAlgebra change_basis(const MatrixXd & P) const
  {
    require(P.rows() == dim_ && P.cols() == dim_, ErrorKind::Argument, "change_basis: bad matrix size");
    const MatrixXd Pinv = checked_solve(P, MatrixXd::Identity(dim_, dim_), 1e-14, ErrorKind::Argument,
      "change_basis");
    LieAlgebra out(dim_);
    for (int a = 0; a < dim_; ++a) {
      for (int b = 0; b < dim_; ++b) {
        const VectorXd br = Pinv * bracket(P.col(a), P.col(b));
        for (int g = 0; g < dim_; ++g) { out.c_[idx(g, a, b)] = br[g]; }
      }
    }
    return out;
  }

  double antisymmetry_defect() const
  {
    double d = 0.0;
    for (int c = 0; c < dim_; ++c) {
      for (int a = 0; a < dim_; ++a) {
        for (int b = 0; b < dim_; ++b) { d = std::max(d, std::abs((*this)(c, a, b) + (*this)(c, b, a))); }
      }
    }
    return d;
  }

  double jacobi_defect() const
  {
    double worst = 0.0;
    for (int a = 0; a < dim_; ++a) {
      for (int b = 0; b < dim_; ++b) {
        for (int c = 0; c < dim_; ++c) {
          for (int d = 0; d < dim_; ++d) {
            double s = 0.0;
            for (int e = 0; e < dim_; ++e) {
              s += (*this)(e, a, b) * (*this)(d, e, c) + (*this)(e, b, c) * (*this)(d, e, a)
                   + (*this)(e, c, a) * (*this)(d, e, b);
            }
            worst = std::max(worst, std::abs(s));
          }
        }
      }
    }
    return worst;
  }

  bool is_abelian() const
  {
    return std::all_of(c_.begin(), c_.end(), [](double x) { return x == 0.0; });
  }

  double max_abs() const
  {
    double m = 0.0;
    for (double x : c_) { m = std::max(m, std::abs(x)); }
    return m;
  }

  /// Throws a spec error unless antisymmetry and Jacobi hold to tol.
  void validate(double tol = 1e-12) const
  {
    const double scale = std::max(1.0, max_abs());
    require(antisymmetry_defect() <= tol * scale, ErrorKind::Spec, "structure constants are not antisymmetric");
    require(jacobi_defect() <= tol * scale * scale, ErrorKind::Spec, "structure constants violate the Jacobi identity");
  }

  static LieAlgebra abelian(int dim) { return LieAlgebra(dim); }

  /// so(3) = su(2) up to scale: [E_a, E_b] = eps_abc E_c.
  static LieAlgebra so3()
  {
    LieAlgebra g(3);
    g.set(2, 0, 1, 1.0);
    g.set(0, 1, 2, 1.0);
    g.set(1, 2, 0, 1.0);
    return g;
  }

  /// se(2) with e1, e2 translations and e3 rotation; matrix commutator.
  static LieAlgebra se2()
  {
    LieAlgebra g(3);
    g.set(1, 0, 2, -1.0);  // [e1, e3] = -e2
    g.set(0, 1, 2, 1.0);   // [e2, e3] = e1
    return g;
  }

private:
  std::size_t idx(int c, int a, int b) const
  {
    return static_cast<std::size_t>((c * dim_ + a) * dim_ + b);
  }

  int dim_{0};
  std::vector<double> c_;
};

inline VectorXd bracket(const LieAlgebra & alg, const VectorXd & xi, const VectorXd & eta)
{
  return alg.bracket(xi, eta);
}

/**
 * @brief Coordinate model of a Lie group acting on itself from the left.
 *
 * fundamental(θ) is K with Ẽ_a = K(b, a) ∂/∂θ^b; adjoint(θ) is 𝒜 with
 * Ad_g E_a = 𝒜(b, a) E_b. The left-invariant fields have coefficients K 𝒜.
 */
struct GroupChart
{
  std::string name;
  LieAlgebra algebra;
  VectorXd identity;
  std::function<VectorXd(const VectorXd &, const VectorXd &)> multiply;
  std::function<VectorXd(const VectorXd &)> inverse;
  MatrixFunction fundamental;
  MatrixFunction adjoint;
  /// Optional closed-form exponential, coordinates of exp(ξ).
  std::function<VectorXd(const VectorXd &)> exp;
  /// Optional domain predicate; develop and the integrators raise chart errors outside it.
  std::function<bool(const VectorXd &)> in_domain;

  int dim() const { return algebra.dim(); }

  MatrixXd K(const VectorXd & theta) const { return fundamental(theta); }
  MatrixXd Ad(const VectorXd & theta) const { return adjoint(theta); }

  /// Coefficients of the left-invariant fields, columns indexed by the basis.
  MatrixXd left_invariant(const VectorXd & theta) const { return K(theta) * Ad(theta); }

  void check_domain(const VectorXd & theta) const
  {
    if (in_domain && !in_domain(theta)) { throw Error(ErrorKind::Chart, name + ": coordinates left the chart domain"); }
  }
};

// ---------------------------------------------------------------------------
// isotropy

struct IsotropySplit
{
  VectorXd mu;
  MatrixXd basis_A;           ///< columns span 𝔤_μ
  MatrixXd basis_alpha;       ///< complementary columns
  MatrixXd change_of_basis;   ///< [basis_A | basis_alpha]
  VectorXd mu_adapted;        ///< μ in the adapted dual basis
  std::vector<double> singular_values;

  int dim_A() const { return static_cast<int>(basis_A.cols()); }
  int dim_alpha() const { return static_cast<int>(basis_alpha.cols()); }
};

/// Matrix of ξ ↦ (a ↦ ξ^b C^c_ab μ_c).
inline MatrixXd coadjoint_condition(const LieAlgebra & alg, const VectorXd & mu)
{
  require_size(mu.size(), alg.dim(), "coadjoint_condition");
  const int m = alg.dim();
  MatrixXd M  = MatrixXd::Zero(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int c = 0; c < m; ++c) { M(a, b) += alg(c, a, b) * mu[c]; }
    }
  }
  return M;
}

inline IsotropySplit isotropy_subalgebra(const LieAlgebra & alg, const VectorXd & mu, double tol = 1e-10)
{
  require(tol > 0.0, ErrorKind::Argument, "isotropy_subalgebra: tol must be positive");
  const int m       = alg.dim();
  const MatrixXd M  = coadjoint_condition(alg, mu);
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullV);
  const VectorXd & s = svd.singularValues();
  const double smax  = s.size() ? s[0] : 0.0;
  int rank           = 0;
  for (int k = 0; k < s.size(); ++k) {
    if (smax > 0.0 && s[k] > tol * smax) { ++rank; }
  }
  const MatrixXd & V = svd.matrixV();

  IsotropySplit out;
  out.mu              = mu;
  out.basis_alpha     = V.leftCols(rank);
  out.basis_A         = V.rightCols(m - rank);
  out.change_of_basis = MatrixXd(m, m);
  out.change_of_basis << out.basis_A, out.basis_alpha;
  out.mu_adapted = out.change_of_basis.transpose() * mu;
  out.singular_values.assign(s.data(), s.data() + s.size());

  const LieAlgebra adapted = alg.change_basis(out.change_of_basis);
  const int k              = m - rank;
  const double bound       = 10.0 * tol * std::max(1.0, alg.max_abs());
  for (int g = k; g < m; ++g) {
    for (int A = 0; A < k; ++A) {
      for (int B = 0; B < k; ++B) {
        require(std::abs(adapted(g, A, B)) <= bound, ErrorKind::Spec,
          "isotropy split is not adapted: bracket of isotropy vectors leaves the isotropy algebra");
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// development

/// Solve g⁻¹ġ = ξ(t), g(t0) = g0 in chart coordinates on the given grid.
inline Trajectory develop(const GroupChart & chart, const std::function<VectorXd(double)> & xi_of_t,
  const VectorXd & g0, const std::vector<double> & grid)
{
  require_size(g0.size(), chart.dim(), "develop: g0");
  const Field f = [&chart, &xi_of_t](double t, const VectorXd & theta) -> VectorXd {
    chart.check_domain(theta);
    const VectorXd xi = xi_of_t(t);
    require_size(xi.size(), chart.dim(), "develop: xi");
    const MatrixXd J = chart.left_invariant(theta);
    if (!J.allFinite()) { throw Error(ErrorKind::Chart, "develop: non-finite chart coefficients"); }
    return J * xi;
  };
  return rk4_on_grid(f, g0, grid);
}

inline Trajectory develop(const GroupChart & chart, const std::function<VectorXd(double)> & xi_of_t,
  const VectorXd & g0, double t0, double tf, double dt)
{
  return develop(chart, xi_of_t, g0, time_grid(t0, tf, dt));
}

// ---------------------------------------------------------------------------
// built-in charts

/// ℝ^m under addition.
inline GroupChart abelian_chart(int m)
{
  GroupChart g;
  g.name        = "R" + std::to_string(m);
  g.algebra     = LieAlgebra::abelian(m);
  g.identity    = VectorXd::Zero(m);
  g.multiply    = [](const VectorXd & a, const VectorXd & b) -> VectorXd { return a + b; };
  g.inverse     = [](const VectorXd & a) -> VectorXd { return -a; };
  g.fundamental = MatrixFunction::generic([m](const auto & th) {
    using T = typename std::decay_t<decltype(th)>::Scalar;
    return Mat<T>(Mat<T>::Identity(m, m));
  });
  g.adjoint = g.fundamental;
  g.exp     = [](const VectorXd & xi) -> VectorXd { return xi; };
  return g;
}

namespace se2_detail {

template<class T>
Mat<T> K(const Vec<T> & th)
{
  Mat<T> k = Mat<T>::Identity(3, 3);
  k(0, 2)  = -th[1];
  k(1, 2)  = th[0];
  return k;
}

template<class T>
Mat<T> Ad(const Vec<T> & th)
{
  using std::cos;
  using std::sin;
  const T c = cos(th[2]), s = sin(th[2]);
  Mat<T> a(3, 3);
  a << c, -s, th[1], s, c, -th[0], T(0.0), T(0.0), T(1.0);
  return a;
}

}  // namespace se2_detail

/// SE(2) with coordinates (y, z, ϕ), g = [[cos ϕ, −sin ϕ, y], [sin ϕ, cos ϕ, z], [0, 0, 1]].
inline GroupChart se2_chart()
{
  GroupChart g;
  g.name     = "SE2";
  g.algebra  = LieAlgebra::se2();
  g.identity = VectorXd::Zero(3);
  g.multiply = [](const VectorXd & a, const VectorXd & b) -> VectorXd {
    const double c = std::cos(a[2]), s = std::sin(a[2]);
    return VectorXd{{b[0] * c - b[1] * s + a[0], b[0] * s + b[1] * c + a[1], a[2] + b[2]}};
  };
  g.inverse = [](const VectorXd & a) -> VectorXd {
    const double c = std::cos(a[2]), s = std::sin(a[2]);
    return VectorXd{{-(c * a[0] + s * a[1]), -(-s * a[0] + c * a[1]), -a[2]}};
  };
  g.fundamental = MatrixFunction::generic([](const auto & th) { return se2_detail::K(th); });
  g.adjoint     = MatrixFunction::generic([](const auto & th) { return se2_detail::Ad(th); });
  g.exp         = [](const VectorXd & xi) -> VectorXd {
    const double w = xi[2];
    double a, b;  // sin w / w, (1 - cos w) / w
    if (std::abs(w) < 1e-6) {
      a = 1.0 - w * w / 6.0;
      b = w / 2.0 - w * w * w / 24.0;
    } else {
      a = std::sin(w) / w;
      b = (1.0 - std::cos(w)) / w;
    }
    return VectorXd{{a * xi[0] - b * xi[1], b * xi[0] + a * xi[1], w}};
  };
  return g;
}

/**
 * @brief Chart in a new basis and linearly changed coordinates.
 *
 * New basis E'_a = P(b, a) E_b, new coordinates θ' = M θ.
 */
inline GroupChart linear_adapted_chart(const GroupChart & base, const MatrixXd & P, const MatrixXd & M,
  const std::string & name)
{
  const int m = base.dim();
  require(P.rows() == m && P.cols() == m && M.rows() == m && M.cols() == m, ErrorKind::Argument,
    "linear_adapted_chart: bad matrix sizes");
  const MatrixXd Pinv = checked_solve(P, MatrixXd::Identity(m, m), 1e-14, ErrorKind::Argument, "adapted chart P");
  const MatrixXd Minv = checked_solve(M, MatrixXd::Identity(m, m), 1e-14, ErrorKind::Argument, "adapted chart M");

  GroupChart g;
  g.name     = name;
  g.algebra  = base.algebra.change_basis(P);
  g.identity = M * base.identity;
  g.multiply = [base, M, Minv](const VectorXd & a, const VectorXd & b) -> VectorXd {
    return M * base.multiply(Minv * a, Minv * b);
  };
  g.inverse = [base, M, Minv](const VectorXd & a) -> VectorXd { return M * base.inverse(Minv * a); };

  auto kfun = [base, P, M, Minv](const auto & th) {
    using T = typename std::decay_t<decltype(th)>::Scalar;
    const Vec<T> old = cast_mat<T>(Minv) * th;
    return Mat<T>(cast_mat<T>(M) * base.fundamental(old) * cast_mat<T>(P));
  };
  auto afun = [base, P, Pinv, Minv](const auto & th) {
    using T = typename std::decay_t<decltype(th)>::Scalar;
    const Vec<T> old = cast_mat<T>(Minv) * th;
    return Mat<T>(cast_mat<T>(Pinv) * base.adjoint(old) * cast_mat<T>(P));
  };
  if (base.fundamental.has_jet() && base.adjoint.has_jet()) {
    g.fundamental = MatrixFunction::generic(kfun);
    g.adjoint     = MatrixFunction::generic(afun);
  } else {
    g.fundamental = MatrixFunction([kfun](const VectorXd & th) -> MatrixXd { return kfun(th); });
    g.adjoint     = MatrixFunction([afun](const VectorXd & th) -> MatrixXd { return afun(th); });
  }
  if (base.exp) {
    g.exp = [base, P, M](const VectorXd & xi) -> VectorXd { return M * base.exp(P * xi); };
  }
  if (base.in_domain) {
    g.in_domain = [base, Minv](const VectorXd & th) { return base.in_domain(Minv * th); };
  }
  return g;
}

// ---------------------------------------------------------------------------
// SO(3)

namespace so3_detail {

template<class T>
Mat<T> hat(const Vec<T> & w)
{
  Mat<T> W(3, 3);
  W << T(0.0), -w[2], w[1], w[2], T(0.0), -w[0], -w[1], w[0], T(0.0);
  return W;
}

/// sin t / t, (1 − cos t) / t², (t − sin t) / t³ as functions of t².
template<class T>
void rot_coeffs(const T & t2, T & f1, T & f2, T & f3)
{
  using std::cos;
  using std::sin;
  using std::sqrt;
  if (value_of(t2) < 1e-2) {
    // Taylor series in t², truncated far below double precision
    auto fact = [](int n) {
      double f = 1.0;
      for (int k = 2; k <= n; ++k) { f *= k; }
      return f;
    };
    f1 = T(0.0);
    f2 = T(0.0);
    f3 = T(0.0);
    for (int k = 6; k >= 0; --k) {
      const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
      f1               = f1 * t2 + T(sgn / fact(2 * k + 1));
      f2               = f2 * t2 + T(sgn / fact(2 * k + 2));
      f3               = f3 * t2 + T(sgn / fact(2 * k + 3));
    }
    return;
  }
  const T t = sqrt(t2);
  const T s = sin(t), c = cos(t);
  f1 = s / t;
  f2 = (T(1.0) - c) / t2;
  f3 = (t - s) / (t2 * t);
}

template<class T>
using Mat3 = Eigen::Matrix<T, 3, 3>;

/// Rodrigues: I + f1 Ŵ + f2 Ŵ², with Ŵ² = w wᵀ − |w|² I.
template<class T>
Mat3<T> expm3(const T & w0, const T & w1, const T & w2)
{
  T f1, f2, f3;
  const T t2 = w0 * w0 + w1 * w1 + w2 * w2;
  rot_coeffs<T>(t2, f1, f2, f3);
  const T c = T(1.0) - f2 * t2;
  Mat3<T> R;
  R(0, 0) = c + f2 * w0 * w0;
  R(1, 1) = c + f2 * w1 * w1;
  R(2, 2) = c + f2 * w2 * w2;
  R(0, 1) = f2 * w0 * w1 - f1 * w2;
  R(1, 0) = f2 * w0 * w1 + f1 * w2;
  R(0, 2) = f2 * w0 * w2 + f1 * w1;
  R(2, 0) = f2 * w0 * w2 - f1 * w1;
  R(1, 2) = f2 * w1 * w2 - f1 * w0;
  R(2, 1) = f2 * w1 * w2 + f1 * w0;
  return R;
}

template<class T>
Mat<T> expm(const Vec<T> & w)
{
  return Mat<T>(expm3<T>(w[0], w[1], w[2]));
}

/// exp(φ + δ) = exp(φ) exp(J_r(φ) δ) to first order.
template<class T>
Mat<T> right_jacobian(const Vec<T> & w)
{
  T f1, f2, f3;
  rot_coeffs<T>(w.squaredNorm(), f1, f2, f3);
  const Mat<T> W = hat<T>(w);
  return Mat<T>::Identity(3, 3) - f2 * W + f3 * (W * W);
}

/// Coset coordinates θ = (s, φ2, φ3), R = exp(s ê1) exp(φ̂), φ = (0, φ2, φ3).
template<class T>
Mat<T> rotation(const Vec<T> & th)
{
  using std::cos;
  using std::sin;
  const T c = cos(th[0]), s = sin(th[0]);
  const Mat3<T> P = expm3<T>(T(0.0), th[1], th[2]);
  Mat3<T> R;
  R.row(0) = P.row(0);
  R.row(1) = c * P.row(1) - s * P.row(2);
  R.row(2) = s * P.row(1) + c * P.row(2);
  return Mat<T>(R);
}

/// Left-trivialised Jacobian: g⁻¹ ∂g/∂θ^k = (column k)^.
template<class T>
Mat<T> left_jacobian(const Vec<T> & th)
{
  Vec<T> phi(3);
  phi << T(0.0), th[1], th[2];
  const Mat<T> Rphi = expm<T>(phi);
  const Mat<T> Jr   = right_jacobian<T>(phi);
  Mat<T> J(3, 3);
  J.col(0) = Rphi.transpose().col(0);
  J.col(1) = Jr.col(1);
  J.col(2) = Jr.col(2);
  return J;
}

template<class T>
Mat<T> K(const Vec<T> & th)
{
  return solve_dense<T>(left_jacobian<T>(th), Mat<T>(rotation<T>(th).transpose()));
}

inline VectorXd coordinates_of(const Eigen::Matrix3d & R)
{
  const Eigen::Vector3d d = R.row(0).transpose();  // R^T e1
  const double sin_a      = std::hypot(d[1], d[2]);
  const double alpha      = std::atan2(sin_a, d[0]);
  const double factor     = sin_a > 1e-300 ? alpha / sin_a : 1.0;
  const Vec<double> phi   = Vec<double>{{0.0, d[2] * factor, -d[1] * factor}};
  const Eigen::Matrix3d Rx = R * expm<double>(Vec<double>(-phi));
  return VectorXd{{std::atan2(Rx(2, 1), Rx(1, 1)), phi[1], phi[2]}};
}

}  // namespace so3_detail

/**
 * @brief SO(3) in coset coordinates adapted to the axis E1.
 *
 * g = exp(s E1) exp(φ2 E2 + φ3 E3) with the so(3) basis satisfying
 * [E_a, E_b] = ε_abc E_c. Valid for |φ| < π.
 */
inline GroupChart so3_coset_chart()
{
  GroupChart g;
  g.name     = "SO3";
  g.algebra  = LieAlgebra::so3();
  g.identity = VectorXd::Zero(3);
  // s is an angle; keep it on the branch nearest s_a + s_b so products of continuous curves stay continuous
  g.multiply = [](const VectorXd & a, const VectorXd & b) -> VectorXd {
    VectorXd c = so3_detail::coordinates_of(so3_detail::rotation<double>(a) * so3_detail::rotation<double>(b));
    const double two_pi = 2.0 * std::numbers::pi;
    c[0] += two_pi * std::round((a[0] + b[0] - c[0]) / two_pi);
    return c;
  };
  g.inverse = [](const VectorXd & a) -> VectorXd {
    return so3_detail::coordinates_of(so3_detail::rotation<double>(a).transpose());
  };
  g.fundamental = MatrixFunction::generic([](const auto & th) {
    using T = typename std::decay_t<decltype(th)>::Scalar;
    return so3_detail::K<T>(th);
  });
  g.adjoint = MatrixFunction::generic([](const auto & th) {
    using T = typename std::decay_t<decltype(th)>::Scalar;
    return so3_detail::rotation<T>(th);
  });
  g.exp = [](const VectorXd & xi) -> VectorXd {
    return so3_detail::coordinates_of(so3_detail::expm<double>(Vec<double>(xi)));
  };
  g.in_domain = [](const VectorXd & th) { return std::hypot(th[1], th[2]) < std::numbers::pi - 1e-3; };
  return g;
}

}  // namespace routhkit
