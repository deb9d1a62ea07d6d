#pragma once

#include <vector>

#include "common.hpp"

namespace routhkit {

/**
 * @brief Matrix field on ℝ^n with at most quadratic entries.
 *
 * P(x) = C0 + Σ_l x_l C1[l] + ½ Σ_{l,r} x_l x_r C2[l n + r].
 */
struct PolyMatrix
{
  int rows{0}, cols{0}, n{0};
  MatrixXd c0;
  std::vector<MatrixXd> c1;
  std::vector<MatrixXd> c2;

  PolyMatrix() = default;
  PolyMatrix(int r, int c, int nvars)
      : rows(r), cols(c), n(nvars), c0(MatrixXd::Zero(r, c)),
        c1(static_cast<std::size_t>(nvars), MatrixXd::Zero(r, c)),
        c2(static_cast<std::size_t>(nvars * nvars), MatrixXd::Zero(r, c))
  {}

  static PolyMatrix constant(const MatrixXd & m, int nvars)
  {
    PolyMatrix p(static_cast<int>(m.rows()), static_cast<int>(m.cols()), nvars);
    p.c0 = m;
    return p;
  }

  PolyMatrix & add_linear(int l, const MatrixXd & m)
  {
    c1.at(static_cast<std::size_t>(l)) += m;
    return *this;
  }

  /// Adds x_l x_r m (split symmetrically between C2[l, r] and C2[r, l]).
  PolyMatrix & add_product(int l, int r, const MatrixXd & m)
  {
    c2.at(static_cast<std::size_t>(l * n + r)) += m;
    c2.at(static_cast<std::size_t>(r * n + l)) += m;
    return *this;
  }

  template<class T>
  Mat<T> operator()(const Vec<T> & x) const
  {
    require_size(x.size(), n, "PolyMatrix");
    Mat<T> out(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        T acc = T(c0(i, j));
        for (int l = 0; l < n; ++l) {
          if (const double a = c1[static_cast<std::size_t>(l)](i, j); a != 0.0) { acc += T(a) * x[l]; }
          for (int r = 0; r < n; ++r) {
            if (const double b = c2[static_cast<std::size_t>(l * n + r)](i, j); b != 0.0) {
              acc += T(0.5 * b) * x[l] * x[r];
            }
          }
        }
        out(i, j) = acc;
      }
    }
    return out;
  }

  MatrixXd operator()(const VectorXd & x) const { return this->operator()<double>(x); }

  /// ∂P/∂x_l.
  MatrixXd derivative(const VectorXd & x, int l) const
  {
    MatrixXd out = c1[static_cast<std::size_t>(l)];
    for (int r = 0; r < n; ++r) {
      out += 0.5 * x[r] * (c2[static_cast<std::size_t>(l * n + r)] + c2[static_cast<std::size_t>(r * n + l)]);
    }
    return out;
  }

  bool is_constant() const
  {
    for (const auto & m : c1) {
      if (!m.isZero(0.0)) { return false; }
    }
    for (const auto & m : c2) {
      if (!m.isZero(0.0)) { return false; }
    }
    return true;
  }
};

}  // namespace routhkit
