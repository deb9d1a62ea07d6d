#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "common.hpp"

namespace routhkit {

/// Time-stamped states with optional named per-sample diagnostics.
struct Trajectory
{
  std::vector<double> times;
  std::vector<VectorXd> states;
  std::map<std::string, std::vector<double>> diagnostics;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  void push(double t, VectorXd x)
  {
    times.push_back(t);
    states.push_back(std::move(x));
  }

  /// Column k of the sampled states.
  std::vector<double> component(Eigen::Index k) const
  {
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto & s : states) { out.push_back(s[k]); }
    return out;
  }
};

/// Thrown when the field fails mid-run; carries what was integrated so far.
class IntegrationError : public Error
{
public:
  IntegrationError(const std::string & what, double t_fail, Trajectory partial, ErrorKind cause)
      : Error(ErrorKind::Integration, what), t_fail_(t_fail), partial_(std::move(partial)), cause_(cause)
  {}
  double time() const { return t_fail_; }
  const Trajectory & partial() const { return partial_; }
  ErrorKind cause() const { return cause_; }

private:
  double t_fail_;
  Trajectory partial_;
  ErrorKind cause_;
};

using Field = std::function<VectorXd(double, const VectorXd &)>;

/// Uniform grid t0, t0 + dt, ... with the last interval shortened to end at tf.
inline std::vector<double> time_grid(double t0, double tf, double dt)
{
  require(dt > 0.0, ErrorKind::Argument, "time step must be positive");
  require(tf > t0, ErrorKind::Argument, "final time must exceed initial time");
  const double span = (tf - t0) / dt;
  auto n            = static_cast<std::size_t>(std::ceil(span - 1e-9));
  if (n == 0) { n = 1; }
  std::vector<double> grid(n + 1);
  for (std::size_t k = 0; k < n; ++k) { grid[k] = t0 + static_cast<double>(k) * dt; }
  grid[n] = tf;
  return grid;
}

/// One classical Runge-Kutta step.
inline VectorXd rk4_step(const Field & f, double t, const VectorXd & y, double h)
{
  const VectorXd k1 = f(t, y);
  const VectorXd k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
  const VectorXd k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
  const VectorXd k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Integrate on a given increasing grid.
inline Trajectory rk4_on_grid(const Field & f, const VectorXd & y0, const std::vector<double> & grid)
{
  Trajectory traj;
  traj.times.reserve(grid.size());
  traj.states.reserve(grid.size());
  traj.push(grid.front(), y0);
  VectorXd y = y0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    try {
      y = rk4_step(f, grid[k], y, grid[k + 1] - grid[k]);
      if (!y.allFinite()) { throw Error(ErrorKind::Evaluation, "non-finite state"); }
    } catch (const IntegrationError &) {
      throw;
    } catch (const Error & e) {
      throw IntegrationError(std::string("integration failed near t = ") + std::to_string(grid[k]) + ": " + e.what(),
        grid[k], traj, e.kind());
    }
    traj.push(grid[k + 1], y);
  }
  return traj;
}

/// Fixed-step RK4 from t0 to tf; the last step is shortened to land on tf.
inline Trajectory rk4(const Field & f, const VectorXd & y0, double t0, double tf, double dt)
{
  return rk4_on_grid(f, y0, time_grid(t0, tf, dt));
}

/// Cubic Hermite interpolation of samples with known derivatives.
class HermiteCurve
{
public:
  HermiteCurve() = default;
  HermiteCurve(std::vector<double> t, std::vector<VectorXd> y, std::vector<VectorXd> dy)
      : t_(std::move(t)), y_(std::move(y)), dy_(std::move(dy))
  {
    require(t_.size() >= 2 && y_.size() == t_.size() && dy_.size() == t_.size(), ErrorKind::Argument,
      "HermiteCurve: need at least two consistent samples");
  }

  double t_begin() const { return t_.front(); }
  double t_end() const { return t_.back(); }

  VectorXd operator()(double t) const
  {
    const std::size_t k = segment(t);
    const double h      = t_[k + 1] - t_[k];
    const double s      = (t - t_[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * y_[k] + h10 * h * dy_[k] + h01 * y_[k + 1] + h11 * h * dy_[k + 1];
  }

  VectorXd derivative(double t) const
  {
    const std::size_t k = segment(t);
    const double h      = t_[k + 1] - t_[k];
    const double s      = (t - t_[k]) / h;
    const double s2     = s * s;
    const double d00 = (6 * s2 - 6 * s) / h, d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / h, d11 = 3 * s2 - 2 * s;
    return d00 * y_[k] + d10 * dy_[k] + d01 * y_[k + 1] + d11 * dy_[k + 1];
  }

private:
  std::size_t segment(double t) const
  {
    if (t <= t_.front()) { return 0; }
    if (t >= t_.back()) { return t_.size() - 2; }
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    return static_cast<std::size_t>(it - t_.begin()) - 1;
  }

  std::vector<double> t_;
  std::vector<VectorXd> y_;
  std::vector<VectorXd> dy_;
};

}  // namespace routhkit
