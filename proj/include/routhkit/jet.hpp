#pragma once

// Second-order hyper-dual numbers: x = v + a e1 + b e2 + ab e1 e2 with
// e1^2 = e2^2 = 0. Evaluating f at (z + a e1 + b e2) yields f, the two
// directional derivatives and the mixed second derivative in one pass.

#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Core>

namespace routhkit {

struct Jet
{
  double v{0.0};
  double a{0.0};
  double b{0.0};
  double ab{0.0};

  constexpr Jet() = default;
  constexpr Jet(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  constexpr Jet(double value, double da, double db, double dab) : v(value), a(da), b(db), ab(dab) {}

  Jet & operator+=(const Jet & o)
  {
    v += o.v;
    a += o.a;
    b += o.b;
    ab += o.ab;
    return *this;
  }
  Jet & operator-=(const Jet & o)
  {
    v -= o.v;
    a -= o.a;
    b -= o.b;
    ab -= o.ab;
    return *this;
  }
  Jet & operator*=(const Jet & o)
  {
    *this = Jet{v * o.v, a * o.v + v * o.a, b * o.v + v * o.b, ab * o.v + a * o.b + b * o.a + v * o.ab};
    return *this;
  }
  Jet & operator/=(const Jet & o);
};

// f(x) for a scalar function with f0 = f(x.v), f1 = f'(x.v), f2 = f''(x.v)
inline Jet chain(const Jet & x, double f0, double f1, double f2)
{
  return {f0, f1 * x.a, f1 * x.b, f1 * x.ab + f2 * x.a * x.b};
}

inline Jet operator+(Jet x, const Jet & y) { return x += y; }
inline Jet operator-(Jet x, const Jet & y) { return x -= y; }
inline Jet operator*(Jet x, const Jet & y) { return x *= y; }
inline Jet operator-(const Jet & x) { return {-x.v, -x.a, -x.b, -x.ab}; }
inline Jet operator+(const Jet & x) { return x; }

inline Jet inv(const Jet & x)
{
  const double r = 1.0 / x.v;
  return chain(x, r, -r * r, 2.0 * r * r * r);
}

inline Jet & Jet::operator/=(const Jet & o)
{
  *this *= inv(o);
  return *this;
}
inline Jet operator/(Jet x, const Jet & y) { return x /= y; }

inline bool operator==(const Jet & x, const Jet & y) { return x.v == y.v; }
inline bool operator!=(const Jet & x, const Jet & y) { return x.v != y.v; }
inline bool operator<(const Jet & x, const Jet & y) { return x.v < y.v; }
inline bool operator>(const Jet & x, const Jet & y) { return x.v > y.v; }
inline bool operator<=(const Jet & x, const Jet & y) { return x.v <= y.v; }
inline bool operator>=(const Jet & x, const Jet & y) { return x.v >= y.v; }

inline Jet sin(const Jet & x)
{
  const double s = std::sin(x.v), c = std::cos(x.v);
  return chain(x, s, c, -s);
}
inline Jet cos(const Jet & x)
{
  const double s = std::sin(x.v), c = std::cos(x.v);
  return chain(x, c, -s, -c);
}
inline Jet exp(const Jet & x)
{
  const double e = std::exp(x.v);
  return chain(x, e, e, e);
}
inline Jet log(const Jet & x) { return chain(x, std::log(x.v), 1.0 / x.v, -1.0 / (x.v * x.v)); }
inline Jet sqrt(const Jet & x)
{
  const double s = std::sqrt(x.v);
  return chain(x, s, 0.5 / s, -0.25 / (s * x.v));
}
inline Jet abs(const Jet & x) { return x.v < 0.0 ? -x : x; }
inline Jet abs2(const Jet & x) { return x * x; }
inline Jet conj(const Jet & x) { return x; }
inline Jet real(const Jet & x) { return x; }
inline Jet imag(const Jet &) { return Jet{}; }
inline bool isfinite(const Jet & x)
{
  return std::isfinite(x.v) && std::isfinite(x.a) && std::isfinite(x.b) && std::isfinite(x.ab);
}
inline bool isnan(const Jet & x) { return !isfinite(x) && !std::isinf(x.v); }
inline bool isinf(const Jet & x) { return std::isinf(x.v); }

inline std::ostream & operator<<(std::ostream & os, const Jet & x)
{
  return os << '[' << x.v << "; " << x.a << ", " << x.b << ", " << x.ab << ']';
}

/// Plain value of a double or of a jet.
inline double value_of(double x) { return x; }
inline double value_of(const Jet & x) { return x.v; }

}  // namespace routhkit

namespace Eigen {

template<>
struct NumTraits<routhkit::Jet> : NumTraits<double>
{
  using Real       = routhkit::Jet;
  using NonInteger = routhkit::Jet;
  using Nested     = routhkit::Jet;
  using Literal    = routhkit::Jet;

  enum {
    IsComplex             = 0,
    IsInteger             = 0,
    IsSigned              = 1,
    RequireInitialization = 1,
    ReadCost              = 4,
    AddCost               = 4,
    MulCost               = 10
  };

  static inline Real epsilon() { return Real(std::numeric_limits<double>::epsilon()); }
  static inline Real dummy_precision() { return Real(1e-12); }
  static inline Real highest() { return Real(std::numeric_limits<double>::max()); }
  static inline Real lowest() { return Real(std::numeric_limits<double>::lowest()); }
  static inline int digits10() { return NumTraits<double>::digits10(); }
};

}  // namespace Eigen
