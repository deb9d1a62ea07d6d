#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "jet.hpp"

namespace routhkit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

template<class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template<class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// ---------------------------------------------------------------------------
// errors

enum class ErrorKind {
  Argument,     ///< malformed input or dimension mismatch
  Spec,         ///< invalid system definition
  Config,       ///< unreadable or inconsistent run configuration
  Chart,        ///< singular fundamental-field matrix or chart-domain exit
  Regularity,   ///< singular Hessian or Hessian block
  LevelSet,     ///< Newton solve for the momentum level set did not converge
  Domain,       ///< state off the momentum level set
  Evaluation,   ///< non-finite values
  Integration,  ///< failure while integrating an ODE
  Tolerance     ///< a comparison exceeded its tolerance
};

inline const char * to_string(ErrorKind k)
{
  switch (k) {
  case ErrorKind::Argument: return "argument";
  case ErrorKind::Spec: return "spec";
  case ErrorKind::Config: return "config";
  case ErrorKind::Chart: return "chart";
  case ErrorKind::Regularity: return "regularity";
  case ErrorKind::LevelSet: return "level_set";
  case ErrorKind::Domain: return "domain";
  case ErrorKind::Evaluation: return "evaluation";
  case ErrorKind::Integration: return "integration";
  case ErrorKind::Tolerance: return "tolerance";
  }
  return "unknown";
}

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string & what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string & msg)
{
  if (!cond) { throw Error(kind, msg); }
}

inline void require_size(Eigen::Index got, Eigen::Index want, const char * what)
{
  if (got != want) {
    throw Error(ErrorKind::Argument,
      std::string(what) + ": expected length " + std::to_string(want) + ", got " + std::to_string(got));
  }
}

// ---------------------------------------------------------------------------
// functions evaluable on doubles and on jets

template<class T>
using ScalarOut = T;

/**
 * @brief Function of a stacked real argument with an optional jet overload.
 *
 * The jet overload, when present, gives exact first and second derivatives
 * (see Jet). Without it derivative helpers fall back to central differences.
 */
template<template<class> class Out>
class JetFunction
{
public:
  using ValueFn = std::function<Out<double>(const Vec<double> &)>;
  using JetFn   = std::function<Out<Jet>(const Vec<Jet> &)>;

  JetFunction() = default;
  explicit JetFunction(ValueFn f, JetFn j = {}) : value_(std::move(f)), jet_(std::move(j)) {}

  /// Wrap a generic callable templated on the scalar type.
  template<class F>
  static JetFunction generic(F f)
  {
    return JetFunction([f](const Vec<double> & z) -> Out<double> { return f(z); },
      [f](const Vec<Jet> & z) -> Out<Jet> { return f(z); });
  }

  Out<double> operator()(const Vec<double> & z) const { return value_(z); }
  Out<Jet> operator()(const Vec<Jet> & z) const
  {
    if (!jet_) { throw Error(ErrorKind::Evaluation, "function has no jet overload"); }
    return jet_(z);
  }

  explicit operator bool() const { return static_cast<bool>(value_); }
  bool has_jet() const { return static_cast<bool>(jet_); }

private:
  ValueFn value_;
  JetFn jet_;
};

using ScalarFunction = JetFunction<ScalarOut>;
using MatrixFunction = JetFunction<Mat>;

/// Central-difference step sizes, relative to 1 + |coordinate|.
struct FiniteDifference
{
  double first  = 1e-5;
  double second = 1e-4;
};

inline constexpr FiniteDifference kDefaultFD{};

inline Vec<Jet> seed(const VectorXd & z, const VectorXd & da, const VectorXd & db)
{
  Vec<Jet> out(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    out[k] = Jet{z[k], da.size() ? da[k] : 0.0, db.size() ? db[k] : 0.0, 0.0};
  }
  return out;
}

namespace detail {

inline double step_for(const VectorXd & z, const VectorXd & dir, double rel)
{
  double scale = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (dir[k] != 0.0) { scale = std::max(scale, std::abs(z[k])); }
  }
  const double nd = dir.lpNorm<Eigen::Infinity>();
  return rel * (1.0 + scale) / (nd > 0.0 ? nd : 1.0);
}

}  // namespace detail

/// Value, first derivatives along da and db, and mixed second derivative.
struct Derivatives
{
  double value{0.0}, da{0.0}, db{0.0}, dab{0.0};
};

/**
 * @brief Derivatives of f(z + s da + r db) at s = r = 0.
 *
 * Exact via jets when available, central differences otherwise.
 */
inline Derivatives derivatives(const ScalarFunction & f, const VectorXd & z, const VectorXd & da,
  const VectorXd & db, const FiniteDifference & fd = kDefaultFD)
{
  if (f.has_jet()) {
    const Jet r = f(seed(z, da, db));
    return {r.v, r.a, r.b, r.ab};
  }
  Derivatives d;
  d.value = f(z);
  if (da.size() && da.squaredNorm() > 0) {
    const double h = detail::step_for(z, da, fd.first);
    d.da           = (f(VectorXd(z + h * da)) - f(VectorXd(z - h * da))) / (2 * h);
  }
  if (db.size() && db.squaredNorm() > 0) {
    const double h = detail::step_for(z, db, fd.first);
    d.db           = (f(VectorXd(z + h * db)) - f(VectorXd(z - h * db))) / (2 * h);
  }
  if (da.size() && db.size() && da.squaredNorm() > 0 && db.squaredNorm() > 0) {
    const double h = detail::step_for(z, da, fd.second);
    const double k = detail::step_for(z, db, fd.second);
    d.dab          = (f(VectorXd(z + h * da + k * db)) - f(VectorXd(z + h * da - k * db))
                     - f(VectorXd(z - h * da + k * db)) + f(VectorXd(z - h * da - k * db)))
                / (4 * h * k);
  }
  return d;
}

/// Directional derivative of a matrix-valued function.
inline MatrixXd directional(
  const MatrixFunction & f, const VectorXd & z, const VectorXd & dir, const FiniteDifference & fd = kDefaultFD)
{
  if (f.has_jet()) {
    const Mat<Jet> r = f(seed(z, dir, VectorXd()));
    return r.unaryExpr([](const Jet & x) { return x.a; });
  }
  const double h = detail::step_for(z, dir, fd.first);
  return (f(VectorXd(z + h * dir)) - f(VectorXd(z - h * dir))) / (2 * h);
}

// ---------------------------------------------------------------------------
// small dense solves that work for doubles and jets

/// Solve A X = B by Gaussian elimination with partial pivoting on values.
template<class T>
Mat<T> solve_dense(Mat<T> A, Mat<T> B)
{
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n) { throw Error(ErrorKind::Argument, "solve_dense: dimension mismatch"); }
  double amax = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) { amax = std::max(amax, std::abs(value_of(A(i, j)))); }
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index p = k;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      if (std::abs(value_of(A(i, k))) > std::abs(value_of(A(p, k)))) { p = i; }
    }
    if (!(std::abs(value_of(A(p, k))) > 1e-14 * amax)) {
      throw Error(ErrorKind::Regularity, "solve_dense: singular matrix");
    }
    if (p != k) {
      A.row(p).swap(A.row(k));
      B.row(p).swap(B.row(k));
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const T f = A(i, k) / A(k, k);
      if (value_of(f) == 0.0 && std::is_same_v<T, double>) { continue; }
      for (Eigen::Index j = k; j < n; ++j) { A(i, j) -= f * A(k, j); }
      for (Eigen::Index j = 0; j < B.cols(); ++j) { B(i, j) -= f * B(k, j); }
    }
  }
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
      T s = B(k, j);
      for (Eigen::Index i = k + 1; i < n; ++i) { s -= A(k, i) * B(i, j); }
      B(k, j) = s / A(k, k);
    }
  }
  return B;
}

template<class T>
Mat<T> inverse_dense(const Mat<T> & A)
{
  return solve_dense<T>(A, Mat<T>::Identity(A.rows(), A.cols()));
}

/// LU solve for doubles that reports singularity through the reciprocal condition estimate.
inline MatrixXd checked_solve(const MatrixXd & A, const MatrixXd & B, double rcond_min, ErrorKind kind, const char * what)
{
  Eigen::PartialPivLU<MatrixXd> lu(A);
  double rc = A.size() ? lu.rcond() : 1.0;
  if (A.size()) {
    // the estimate is unreliable once a pivot is exactly zero
    const VectorXd piv = lu.matrixLU().diagonal().cwiseAbs();
    rc = piv.maxCoeff() > 0.0 ? std::min(rc, piv.minCoeff() / piv.maxCoeff()) : 0.0;
  }
  if (!(rc > rcond_min) || !std::isfinite(rc)) {
    throw Error(kind, std::string(what) + ": singular matrix (condition number ~ " + std::to_string(1.0 / rc) + ")");
  }
  return lu.solve(B);
}

inline double condition_number(const MatrixXd & A)
{
  if (A.size() == 0) { return 1.0; }
  Eigen::PartialPivLU<MatrixXd> lu(A);
  return 1.0 / lu.rcond();
}

template<class T>
Vec<T> cast_vec(const VectorXd & v)
{
  return v.template cast<T>();
}

template<class T>
Mat<T> cast_mat(const MatrixXd & m)
{
  return m.template cast<T>();
}

inline VectorXd concat(std::initializer_list<const VectorXd *> parts)
{
  Eigen::Index n = 0;
  for (auto p : parts) { n += p->size(); }
  VectorXd out(n);
  Eigen::Index o = 0;
  for (auto p : parts) {
    out.segment(o, p->size()) = *p;
    o += p->size();
  }
  return out;
}

inline VectorXd unit(Eigen::Index n, Eigen::Index k)
{
  VectorXd e = VectorXd::Zero(n);
  e[k]       = 1.0;
  return e;
}

}  // namespace routhkit
