#pragma once

/**
 * @file stiff.hpp
 * @brief Adaptive second-order Rosenbrock integrator (Shampine-Reichelt
 * "ode23s" coefficients) for small autonomous stiff systems.
 *
 * The scheme is L-stable and linearly implicit: each step factors
 * W = I - h*d*J once and performs three solves, so no Newton iteration is
 * needed. The embedded third-order error estimate drives step control.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "janus/error.hpp"

namespace janus::stiff {

struct Options {
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  double h_max = std::numeric_limits<double>::infinity();
  double h_init = 0.0;  // 0 => automatic
};

struct Stats {
  long accepted = 0;
  long rejected = 0;
  long jacobian_evals = 0;
};

template <int N>
class Rosenbrock23 {
 public:
  using State = Eigen::Matrix<double, N, 1>;
  using Matrix = Eigen::Matrix<double, N, N>;

  explicit Rosenbrock23(Options opt = {}) : opt_(opt), abs_tol_(State::Constant(opt.abs_tol)) {}

  /// Per-component absolute tolerances, replacing the scalar `Options::abs_tol`.
  void set_abs_tol(const State& tol) { abs_tol_ = tol; }

  const Stats& stats() const { return stats_; }

  /// Next trial step size; carried between calls so consecutive intervals
  /// continue from the controller's last estimate.
  double step_size() const { return h_; }
  void reset_step_size() { h_ = 0.0; }

  /// Advances y from t0 to t1 in place. `rhs(y) -> State`, `jac(y) -> Matrix`.
  template <class Rhs, class Jac>
  void integrate(Rhs&& rhs, Jac&& jac, double t0, double t1, State& y) {
    if (!(t1 > t0)) return;
    constexpr double d = 1.0 / (2.0 + std::numbers::sqrt2);
    constexpr double e32 = 6.0 + std::numbers::sqrt2;

    double t = t0;
    State f0 = rhs(y);
    if (h_ <= 0.0) h_ = initial_step(y, f0, t1 - t0);

    while (t < t1) {
      double h = std::min({h_, opt_.h_max, t1 - t});
      bool last = false;
      const Matrix J = jac(y);
      ++stats_.jacobian_evals;

      for (;;) {
        // Swallow a round-off sliver left before t1 into this step.
        last = t1 - (t + h) <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t1));
        if (last) h = t1 - t;
        const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        if (h < h_min) throw StiffnessError("step size underflow", t);

        const Matrix W = Matrix::Identity() - (h * d) * J;
        const Eigen::PartialPivLU<Matrix> lu(W);
        const State k1 = lu.solve(f0);
        const State f1 = rhs(State(y + 0.5 * h * k1));
        const State k2 = lu.solve(State(f1 - k1)) + k1;
        const State y_new = y + h * k2;
        const State f2 = rhs(y_new);
        const State k3 = lu.solve(State(f2 - e32 * (k2 - f1) - 2.0 * (k1 - f0)));
        const State err_vec = (h / 6.0) * (k1 - 2.0 * k2 + k3);

        double err = 0.0;
        for (int i = 0; i < y.size(); ++i) {
          const double sc = abs_tol_[i] + opt_.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
          const double e = std::abs(err_vec[i]) / sc;
          if (!(e <= err)) err = e;  // keeps NaN
        }
        if (!std::isfinite(err)) err = 1e10;

        if (err <= 1.0) {
          ++stats_.accepted;
          const double grow = err > 0.0 ? std::min(5.0, 0.8 * std::cbrt(1.0 / err)) : 5.0;
          // Do not let a clipped final step shrink the carried step size.
          if (!(last && h < h_)) h_ = h * std::max(1.0, grow);
          t = last ? t1 : t + h;
          y = y_new;
          f0 = f2;
          break;
        }
        ++stats_.rejected;
        h *= std::max(0.1, 0.8 * std::cbrt(1.0 / err));
        h_ = h;
      }
    }
  }

 private:
  double initial_step(const State& y, const State& f, double span) const {
    // Scaled-norm ratio 0.01 |y| / |f| (Hairer, Norsett & Wanner, II.4).
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double sc = abs_tol_[i] + opt_.rel_tol * std::abs(y[i]);
      d0 = std::max(d0, std::abs(y[i]) / sc);
      d1 = std::max(d1, std::abs(f[i]) / sc);
    }
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    return std::min({h, span, opt_.h_max});
  }

  Options opt_;
  State abs_tol_;
  Stats stats_;
  double h_ = 0.0;
};

}  // namespace janus::stiff
