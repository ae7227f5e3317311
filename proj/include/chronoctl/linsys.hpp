#pragma once

#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "chronoctl/calculus.hpp"
#include "chronoctl/expr.hpp"
#include "chronoctl/timescale.hpp"

namespace chronoctl {

enum class Direction { forward_delta, backward_nabla };

/// x^Delta = A x + B u, z = C x + D u   (forward, anchor t0 is the start), or
/// y^nabla = A y + B v, gamma = C y + D v (backward, anchor s0 is the end).
class LinearSystem {
 public:
  LinearSystem(Direction direction, TimeScale scale, MatrixExpr A, MatrixExpr B, MatrixExpr C,
               std::optional<MatrixExpr> D, Rational anchor, std::optional<Rational> dense_step = {});

  Direction direction() const { return direction_; }
  bool backward() const { return direction_ == Direction::backward_nabla; }
  const TimeScale& scale() const { return grid_.scale(); }
  const Grid& grid() const { return grid_; }
  const Rational& anchor() const { return anchor_; }

  const MatrixExpr& A() const { return A_; }
  const MatrixExpr& B() const { return B_; }
  const MatrixExpr& C() const { return C_; }
  const MatrixExpr& D() const { return D_; }

  Eigen::Index n() const { return A_.rows(); }
  Eigen::Index m() const { return B_.cols(); }
  Eigen::Index p() const { return C_.rows(); }

  /// All four matrices free of the time variable.
  bool time_invariant() const;

 private:
  Direction direction_;
  Grid grid_;
  MatrixExpr A_, B_, C_, D_;
  Rational anchor_;
};

/// The dual system on the reflected scale: A(s) -> -A(-s), B(s) -> -B(-s),
/// C(s) -> C(-s), D(s) -> D(-s); direction flipped, anchor negated.
LinearSystem dualize_system(const LinearSystem& sys);

/// Input signal u(t) (or v(s)) as a column vector.
using Control = std::function<Eigen::VectorXd(double)>;

Control control_from_expr(const MatrixExpr& u);
/// Piecewise-linear interpolation inside dense components; exact at grid points.
Control control_from_samples(const GridFunction& u);
Control zero_control(Eigen::Index m);

/// One-step propagators. step_forward(sys, i) maps x(t_i) to x(t_{i+1}):
/// I + mu A(t_i) across a gap, one classical RK4 step on a dense step.
/// step_backward(sys, i) maps y(s_{i+1}) to y(s_i): I - nu A(s_{i+1}) across a
/// gap, one RK4 step run backwards on a dense step.
Eigen::MatrixXd step_forward(const LinearSystem& sys, std::size_t i);
Eigen::MatrixXd step_backward(const LinearSystem& sys, std::size_t i);

/// Phi_A(t, t0) for t >= t0, accumulated left to right.
Eigen::MatrixXd transition_forward(const LinearSystem& sys, const Rational& t, const Rational& t0);

/// Psi_A(s, s0) for s <= s0, accumulated right to left by backward stepping.
Eigen::MatrixXd transition_backward(const LinearSystem& sys, const Rational& s, const Rational& s0);

/// Psi_A(s, s0) evaluated as Phi of the dual system at (-s, -s0).
Eigen::MatrixXd transition_backward_via_dual(const LinearSystem& sys, const Rational& s,
                                             const Rational& s0);

/// e_A(t, t0) for constant A on the grid.
Eigen::MatrixXd exp_forward(const Eigen::MatrixXd& A, const Grid& grid, const Rational& t,
                            const Rational& t0);
/// Nabla exponential e^_A(s, s0) for constant A on the grid.
Eigen::MatrixXd exp_backward(const Eigen::MatrixXd& A, const Grid& grid, const Rational& s,
                             const Rational& s0);

struct Trajectory {
  GridFunction state;   // n x 1 per point, ascending time
  GridFunction output;  // p x 1 per point
};

/// Unique backward solution on [s1, s0] (s0 = anchor) by direct stepping:
/// y(rho(s)) = (I - nu A) y(s) - nu B v(s) at gaps, RK4 on dense steps.
Trajectory solve_backward_ivp(const LinearSystem& sys, const Eigen::VectorXd& y0,
                              const Control& v, const Rational& s1);

/// Forward solution on [t0, t1] (t0 = anchor):
/// x(sigma(t)) = (I + mu A) x(t) + mu B u(t) at gaps, RK4 on dense steps.
Trajectory solve_forward_ivp(const LinearSystem& sys, const Eigen::VectorXd& x0,
                             const Control& u, const Rational& t1);

/// y(s) = Psi(s, s0) y0 - int_s^{s0} Psi(s, rho(z)) B(z) v(z) nabla z, the
/// kernel form that matches the stepped solution.
Eigen::VectorXd backward_variation_of_constants(const LinearSystem& sys, const Eigen::VectorXd& y0,
                                                const Control& v, const Rational& s);

struct InvertibilityReport {
  bool holds = true;
  std::optional<Rational> witness;  // first failing grid point
};

/// I - nu(s) A(s) invertible at every left-scattered grid point.
InvertibilityReport is_progressive(const LinearSystem& sys);
/// I + mu(t) A(t) invertible at every right-scattered grid point.
InvertibilityReport is_regressive(const LinearSystem& sys);

}  // namespace chronoctl
