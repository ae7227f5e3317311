#include "chronoctl/linsys.hpp"

#include <algorithm>
#include <cmath>

#include "chronoctl/errors.hpp"

namespace chronoctl {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void require_direction(const LinearSystem& sys, Direction d, const char* op) {
  if (sys.direction() != d) {
    throw DomainError(std::string(op) +
                      (d == Direction::forward_delta ? " needs a forward (delta) system"
                                                     : " needs a backward (nabla) system"));
  }
}

// |det M| small relative to the Hadamard bound (product of column norms).
bool numerically_singular(const MatrixXd& M) {
  double bound = 1.0;
  for (Eigen::Index c = 0; c < M.cols(); ++c) bound *= M.col(c).norm();
  if (bound == 0.0) return true;
  return std::abs(M.determinant()) <= 1e-12 * bound;
}

LinearSystem constant_system(Direction d, const MatrixXd& A, const Grid& grid,
                             const Rational& anchor) {
  const auto n = A.rows();
  return LinearSystem(d, grid.scale(), MatrixExpr::constant(A), MatrixExpr::zero(n, 1),
                      MatrixExpr::zero(1, n), std::nullopt, anchor, grid.dense_step());
}

void check_grid_match(const LinearSystem& sys, const Grid& grid) {
  if (!(sys.grid() == grid)) throw DomainError("grid does not match the canonical grid");
}

// One classical RK4 step of y' = A(s) y run backwards from s to s - h, as a
// matrix acting on y(s).
MatrixXd rk4_backward(const LinearSystem& sys, double s, double h) {
  const auto n = sys.n();
  const MatrixXd I = MatrixXd::Identity(n, n);
  const double half = 0.5 * h;
  const MatrixXd Amid = sys.A().eval(s - half);
  const MatrixXd K1 = sys.A().eval(s);
  const MatrixXd K2 = Amid * (I - half * K1);
  const MatrixXd K3 = Amid * (I - half * K2);
  const MatrixXd K4 = sys.A().eval(s - h) * (I - h * K3);
  return I - (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
}

}  // namespace

LinearSystem::LinearSystem(Direction direction, TimeScale scale, MatrixExpr A, MatrixExpr B,
                           MatrixExpr C, std::optional<MatrixExpr> D, Rational anchor,
                           std::optional<Rational> dense_step)
    : direction_(direction),
      grid_(build_grid(scale, dense_step ? *dense_step : default_dense_step(scale))),
      A_(std::move(A)),
      B_(std::move(B)),
      C_(std::move(C)),
      D_(D ? std::move(*D) : MatrixExpr::zero(C_.rows(), B_.cols())),
      anchor_(anchor) {
  const auto n = A_.rows();
  if (n == 0 || A_.cols() != n) throw DomainError("A must be square and non-empty");
  if (B_.rows() != n) throw DomainError("B must have n rows");
  if (C_.cols() != n) throw DomainError("C must have n columns");
  if (D_.rows() != C_.rows() || D_.cols() != B_.cols()) throw DomainError("D must be p x m");
  if (B_.cols() > n || C_.rows() > n) throw DomainError("system requires m <= n and p <= n");
  if (!grid_.find(anchor_)) throw DomainError("anchor must be a grid point of the time scale");
}

bool LinearSystem::time_invariant() const {
  return A_.is_constant() && B_.is_constant() && C_.is_constant() && D_.is_constant();
}

LinearSystem dualize_system(const LinearSystem& sys) {
  Direction d = sys.backward() ? Direction::forward_delta : Direction::backward_nabla;
  return LinearSystem(d, sys.scale().dual(), sys.A().reflect_time(true),
                      sys.B().reflect_time(true), sys.C().reflect_time(false),
                      sys.D().reflect_time(false), -sys.anchor(), sys.grid().dense_step());
}

Control control_from_expr(const MatrixExpr& u) {
  if (u.cols() != 1) throw DomainError("control expression must be a column");
  return [u](double t) -> VectorXd { return u.eval(t); };
}

Control control_from_samples(const GridFunction& u) {
  if (u.cols() != 1) throw DomainError("control samples must be columns");
  return [u](double t) -> VectorXd {
    auto times = u.grid().times();
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end()) throw DomainError("control sampled outside its grid");
    const auto i = static_cast<std::size_t>(it - times.begin());
    if (*it == t) return u.value(i);
    if (i == 0 || u.grid().gap_before(i)) throw DomainError("control sampled outside its grid");
    const double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    return (1.0 - w) * u.value(i - 1) + w * u.value(i);
  };
}

Control zero_control(Eigen::Index m) {
  return [m](double) -> VectorXd { return VectorXd::Zero(m); };
}

MatrixXd step_forward(const LinearSystem& sys, std::size_t i) {
  const Grid& g = sys.grid();
  const auto n = sys.n();
  const MatrixXd I = MatrixXd::Identity(n, n);
  const double t = g.time(i);
  const double h = to_double(g.step_after(i));
  if (g.gap_after(i)) return I + h * sys.A().eval(t);
  const double half = 0.5 * h;
  const MatrixXd Amid = sys.A().eval(t + half);
  const MatrixXd K1 = sys.A().eval(t);
  const MatrixXd K2 = Amid * (I + half * K1);
  const MatrixXd K3 = Amid * (I + half * K2);
  const MatrixXd K4 = sys.A().eval(g.time(i + 1)) * (I + h * K3);
  return I + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
}

MatrixXd step_backward(const LinearSystem& sys, std::size_t i) {
  const Grid& g = sys.grid();
  const double s = g.time(i + 1);
  const double h = to_double(g.step_after(i));
  if (g.gap_after(i)) return MatrixXd::Identity(sys.n(), sys.n()) - h * sys.A().eval(s);
  return rk4_backward(sys, s, h);
}

MatrixXd transition_forward(const LinearSystem& sys, const Rational& t, const Rational& t0) {
  require_direction(sys, Direction::forward_delta, "transition_forward");
  if (t < t0) throw DomainError("forward transition requested backward");
  const std::size_t i0 = sys.grid().index_of(t0);
  const std::size_t i1 = sys.grid().index_of(t);
  MatrixXd M = MatrixXd::Identity(sys.n(), sys.n());
  for (std::size_t i = i0; i < i1; ++i) M = step_forward(sys, i) * M;
  return M;
}

MatrixXd transition_backward(const LinearSystem& sys, const Rational& s, const Rational& s0) {
  require_direction(sys, Direction::backward_nabla, "transition_backward");
  if (s > s0) throw DomainError("backward transition requested forward");
  const std::size_t i0 = sys.grid().index_of(s0);
  const std::size_t i1 = sys.grid().index_of(s);
  MatrixXd M = MatrixXd::Identity(sys.n(), sys.n());
  for (std::size_t i = i0; i > i1; --i) M = step_backward(sys, i - 1) * M;
  return M;
}

MatrixXd transition_backward_via_dual(const LinearSystem& sys, const Rational& s,
                                      const Rational& s0) {
  require_direction(sys, Direction::backward_nabla, "transition_backward_via_dual");
  if (s > s0) throw DomainError("backward transition requested forward");
  return transition_forward(dualize_system(sys), -s, -s0);
}

MatrixXd exp_forward(const MatrixXd& A, const Grid& grid, const Rational& t, const Rational& t0) {
  auto sys = constant_system(Direction::forward_delta, A, grid, t0);
  check_grid_match(sys, grid);
  return transition_forward(sys, t, t0);
}

MatrixXd exp_backward(const MatrixXd& A, const Grid& grid, const Rational& s, const Rational& s0) {
  auto sys = constant_system(Direction::backward_nabla, A, grid, s0);
  check_grid_match(sys, grid);
  return transition_backward(sys, s, s0);
}

Trajectory solve_backward_ivp(const LinearSystem& sys, const VectorXd& y0, const Control& v,
                              const Rational& s1) {
  require_direction(sys, Direction::backward_nabla, "solve_backward_ivp");
  const Grid& g = sys.grid();
  if (y0.size() != sys.n()) throw DomainError("initial state has wrong dimension");
  if (s1 > sys.anchor()) throw DomainError("backward solve requires s1 <= s0");
  const std::size_t i1 = g.index_of(s1);
  const std::size_t i0 = g.index_of(sys.anchor());

  auto control_at = [&](double s) {
    VectorXd val = v(s);
    if (val.size() != sys.m()) throw DomainError("control has wrong dimension");
    return val;
  };

  const std::size_t count = i0 - i1 + 1;
  std::vector<MatrixXd> states(count), outputs(count);
  VectorXd y = y0;
  for (std::size_t i = i0;; --i) {
    const double s = g.time(i);
    const VectorXd vs = control_at(s);
    states[i - i1] = y;
    outputs[i - i1] = sys.C().eval(s) * y + sys.D().eval(s) * vs;
    if (i == i1) break;

    const double h = to_double(g.step_after(i - 1));
    if (g.gap_before(i)) {
      const MatrixXd M = MatrixXd::Identity(sys.n(), sys.n()) - h * sys.A().eval(s);
      y = M * y - h * (sys.B().eval(s) * vs);
    } else {
      const double half = 0.5 * h;
      auto rhs = [&](double at, const VectorXd& state) -> VectorXd {
        return sys.A().eval(at) * state + sys.B().eval(at) * control_at(at);
      };
      const VectorXd k1 = rhs(s, y);
      const VectorXd k2 = rhs(s - half, y - half * k1);
      const VectorXd k3 = rhs(s - half, y - half * k2);
      const VectorXd k4 = rhs(g.time(i - 1), y - h * k3);
      y = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!y.allFinite()) throw NumericError("backward solution is not finite");
  }
  Grid slice = g.window(s1, sys.anchor());
  return {GridFunction(slice, std::move(states)), GridFunction(slice, std::move(outputs))};
}

Trajectory solve_forward_ivp(const LinearSystem& sys, const VectorXd& x0, const Control& u,
                             const Rational& t1) {
  require_direction(sys, Direction::forward_delta, "solve_forward_ivp");
  const Grid& g = sys.grid();
  if (x0.size() != sys.n()) throw DomainError("initial state has wrong dimension");
  if (t1 < sys.anchor()) throw DomainError("forward solve requires t1 >= t0");
  const std::size_t i0 = g.index_of(sys.anchor());
  const std::size_t i1 = g.index_of(t1);

  auto control_at = [&](double t) {
    VectorXd val = u(t);
    if (val.size() != sys.m()) throw DomainError("control has wrong dimension");
    return val;
  };

  std::vector<MatrixXd> states, outputs;
  states.reserve(i1 - i0 + 1);
  outputs.reserve(i1 - i0 + 1);
  VectorXd x = x0;
  for (std::size_t i = i0;; ++i) {
    const double t = g.time(i);
    const VectorXd ut = control_at(t);
    states.push_back(x);
    outputs.push_back(sys.C().eval(t) * x + sys.D().eval(t) * ut);
    if (i == i1) break;

    const double h = to_double(g.step_after(i));
    if (g.gap_after(i)) {
      const MatrixXd M = MatrixXd::Identity(sys.n(), sys.n()) + h * sys.A().eval(t);
      x = M * x + h * (sys.B().eval(t) * ut);
    } else {
      const double half = 0.5 * h;
      auto rhs = [&](double at, const VectorXd& state) -> VectorXd {
        return sys.A().eval(at) * state + sys.B().eval(at) * control_at(at);
      };
      const VectorXd k1 = rhs(t, x);
      const VectorXd k2 = rhs(t + half, x + half * k1);
      const VectorXd k3 = rhs(t + half, x + half * k2);
      const VectorXd k4 = rhs(g.time(i + 1), x + h * k3);
      x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!x.allFinite()) throw NumericError("forward solution is not finite");
  }
  Grid slice = g.window(sys.anchor(), t1);
  return {GridFunction(slice, std::move(states)), GridFunction(slice, std::move(outputs))};
}

VectorXd backward_variation_of_constants(const LinearSystem& sys, const VectorXd& y0,
                                         const Control& v, const Rational& s) {
  require_direction(sys, Direction::backward_nabla, "backward_variation_of_constants");
  const Grid& g = sys.grid();
  const std::size_t is = g.index_of(s);
  const std::size_t i0 = g.index_of(sys.anchor());
  if (is > i0) throw DomainError("variation of constants requires s <= s0");

  // kernel[j] = Psi(s, x_j) for x_j in [s, s0]
  std::vector<MatrixXd> kernel;
  kernel.reserve(i0 - is + 1);
  kernel.push_back(MatrixXd::Identity(sys.n(), sys.n()));
  for (std::size_t j = is; j < i0; ++j) kernel.push_back(kernel.back() * step_backward(sys, j));

  // The integrand Psi(s, rho(z)) B(z) v(z) jumps at the left end of a dense
  // component, so each step is integrated on its own: the gap term at a
  // left-scattered point, Simpson's rule on a dense step.
  auto forcing = [&](double z) -> VectorXd { return sys.B().eval(z) * v(z); };
  VectorXd integral = VectorXd::Zero(sys.n());
  for (std::size_t j = is + 1; j <= i0; ++j) {
    const double z = g.time(j);
    const double h = to_double(g.step_after(j - 1));
    const MatrixXd& left = kernel[j - 1 - is];
    if (g.gap_before(j)) {
      integral += h * (left * forcing(z));
    } else {
      const double zl = g.time(j - 1);
      const double zm = z - 0.5 * h;
      const MatrixXd mid = left * rk4_backward(sys, zm, 0.5 * h);
      integral += (h / 6.0) * (left * forcing(zl) + 4.0 * (mid * forcing(zm)) +
                               kernel[j - is] * forcing(z));
    }
  }
  return kernel.back() * y0 - integral;
}

InvertibilityReport is_progressive(const LinearSystem& sys) {
  require_direction(sys, Direction::backward_nabla, "is_progressive");
  const Grid& g = sys.grid();
  const MatrixXd I = MatrixXd::Identity(sys.n(), sys.n());
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (!g.gap_before(i)) continue;
    if (numerically_singular(I - to_double(g.nu(i)) * sys.A().eval(g.time(i)))) {
      return {false, g.point(i)};
    }
  }
  return {};
}

InvertibilityReport is_regressive(const LinearSystem& sys) {
  require_direction(sys, Direction::forward_delta, "is_regressive");
  const Grid& g = sys.grid();
  const MatrixXd I = MatrixXd::Identity(sys.n(), sys.n());
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    if (!g.gap_after(i)) continue;
    if (numerically_singular(I + to_double(g.mu(i)) * sys.A().eval(g.time(i)))) {
      return {false, g.point(i)};
    }
  }
  return {};
}

}  // namespace chronoctl
