#include <doctest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "chronoctl/errors.hpp"
#include "chronoctl/linsys.hpp"
#include "support.hpp"

using namespace chronoctl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Rational R(std::int64_t n, std::int64_t d = 1) { return Rational(n, d); }

TimeScale make(GeneratorKind kind, Rational lo, Rational hi, Rational h = Rational(1)) {
  Generator g;
  g.kind = kind;
  g.h = h;
  return from_generator(g, lo, hi);
}

MatrixExpr mat(const MatrixXd& m) { return MatrixExpr::constant(m); }
MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

LinearSystem constant_sys(Direction d, const TimeScale& ts, const MatrixXd& A, const MatrixXd& B,
                          const MatrixXd& C, Rational anchor,
                          std::optional<Rational> step = std::nullopt) {
  return LinearSystem(d, ts, mat(A), mat(B), mat(C), std::nullopt, anchor, step);
}

LinearSystem scalar_sys(Direction d, const TimeScale& ts, double a, Rational anchor,
                        std::optional<Rational> step = std::nullopt) {
  return constant_sys(d, ts, scalar(a), scalar(1), scalar(1), anchor, step);
}

}  // namespace

TEST_CASE("forward transition on classical scales") {
  const auto z = make(GeneratorKind::integers, R(0), R(5));
  CHECK(transition_forward(scalar_sys(Direction::forward_delta, z, 1.0, R(0)), R(3), R(0))(0, 0) ==
        8.0);

  const auto r = make(GeneratorKind::reals, R(0), R(2));
  MatrixXd N(2, 2);
  N << 0, 1, 0, 0;
  const auto nil = constant_sys(Direction::forward_delta, r, N, MatrixXd::Identity(2, 2),
                                MatrixXd::Identity(2, 2), R(0));
  MatrixXd expect(2, 2);
  expect << 1, 1, 0, 1;
  CHECK((transition_forward(nil, R(1), R(0)) - expect).norm() <= 1e-8);

  const auto e = scalar_sys(Direction::forward_delta, r, 1.0, R(0));
  CHECK(std::abs(transition_forward(e, R(1), R(0))(0, 0) - std::exp(1.0)) <= 1e-6);
  CHECK(transition_forward(e, R(1, 2), R(1, 2)) == MatrixXd::Identity(1, 1));
  CHECK_THROWS_WITH_AS(transition_forward(e, R(0), R(1)), "forward transition requested backward",
                       DomainError);
}

TEST_CASE("backward transition on classical scales") {
  const auto z = make(GeneratorKind::integers, R(-5), R(0));
  const auto sys = scalar_sys(Direction::backward_nabla, z, -1.0, R(0));
  CHECK(transition_backward(sys, R(-2), R(0))(0, 0) == 4.0);
  CHECK(transition_backward(sys, R(0), R(0)) == MatrixXd::Identity(1, 1));

  const auto r = make(GeneratorKind::reals, R(-5), R(0));
  const auto e = scalar_sys(Direction::backward_nabla, r, 1.0, R(0));
  CHECK(std::abs(transition_backward(e, R(-1), R(0))(0, 0) - std::exp(-1.0)) <= 1e-6);
  CHECK_THROWS_AS(transition_backward(e, R(0), R(-1)), DomainError);
}

TEST_CASE("constant exponentials") {
  const auto z = make(GeneratorKind::integers, R(0), R(5));
  const Grid gz = build_grid(z, R(1));
  CHECK(exp_forward(scalar(1.0), gz, R(3), R(0))(0, 0) == 8.0);
  CHECK(exp_backward(scalar(-1.0), gz.dual(), R(-3), R(0))(0, 0) == 8.0);
  CHECK(exp_forward(MatrixXd::Zero(2, 2), gz, R(4), R(1)) == MatrixXd::Identity(2, 2));

  const auto hz = make(GeneratorKind::h_integers, R(0), R(3), R(1, 2));
  CHECK(exp_forward(scalar(1.0), build_grid(hz, R(1)), R(2), R(0))(0, 0) == 5.0625);

  // e_A(t, t0) = e^_{-A}(-t, -t0) on the dual scale, on a mixed scale.
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const TimeScale ts = testing_support::random_mixed_scale(rng);
    const Grid g = build_grid(ts, R(1, 20));
    const MatrixXd A = testing_support::random_matrix(rng, 2, 2, -1, 1);
    const std::size_t i0 = static_cast<std::size_t>(testing_support::pick(rng, 0, g.size() - 1));
    const std::size_t i1 = static_cast<std::size_t>(testing_support::pick(rng, i0, g.size() - 1));
    const MatrixXd fwd = exp_forward(A, g, g.point(i1), g.point(i0));
    const MatrixXd bwd = exp_backward(-A, g.dual(), -g.point(i1), -g.point(i0));
    CHECK((fwd - bwd).norm() <= 1e-9 * (1 + fwd.norm()));
  }
}

TEST_CASE("dual systems") {
  const auto p = make(GeneratorKind::periodic_union, R(0), R(5));
  MatrixXd A(2, 2), B(2, 1), C(1, 2);
  A << 0, 1, -3, -4;
  B << 0, 1;
  C << 1, 0;
  const auto bwd = constant_sys(Direction::backward_nabla, p.dual(), A, B, C, R(0));
  const auto fwd = dualize_system(bwd);
  CHECK_FALSE(fwd.backward());
  CHECK(fwd.scale() == p);
  CHECK(fwd.anchor() == R(0));
  MatrixXd Ad(2, 2), Bd(2, 1);
  Ad << 0, -1, 3, 4;
  Bd << 0, -1;
  CHECK(fwd.A().eval(1.0) == Ad);
  CHECK(fwd.B().eval(1.0) == Bd);
  CHECK(fwd.C().eval(1.0) == C);

  const auto sa = scalar_sys(Direction::forward_delta, p, 2.5, R(0));
  CHECK(dualize_system(sa).A().eval(-1.0)(0, 0) == -2.5);

  // Involution on evaluated matrices for time-varying entries.
  const LinearSystem tv(Direction::backward_nabla, p.dual(),
                        MatrixExpr::parse({{"1", "s^2"}, {"0", "-1"}}),
                        MatrixExpr::parse({{"1", "0"}, {"0", "-s"}}), mat(MatrixXd::Identity(2, 2)),
                        std::nullopt, R(-1));
  const auto twice = dualize_system(dualize_system(tv));
  for (std::size_t i = 0; i < tv.grid().size(); ++i) {
    const double s = tv.grid().time(i);
    CHECK(twice.A().eval(s) == tv.A().eval(s));
    CHECK(twice.B().eval(s) == tv.B().eval(s));
  }
  CHECK(twice.grid() == tv.grid());
}

TEST_CASE("transition duality and semigroup on random mixed scales") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const TimeScale ts = testing_support::random_mixed_scale(rng);
    const auto A = testing_support::random_matrix_expr(rng, 2, 2);
    const Rational anchor = ts.max();
    const LinearSystem sys(Direction::backward_nabla, ts, A, mat(MatrixXd::Identity(2, 2)),
                           mat(MatrixXd::Identity(2, 2)), std::nullopt, anchor, R(1, 40));
    const Grid& g = sys.grid();
    auto idx = [&](std::size_t lo) {
      return static_cast<std::size_t>(testing_support::pick(rng, lo, g.size() - 1));
    };
    const std::size_t a = idx(0), b = idx(a), c = idx(b);
    const MatrixXd psi_ac = transition_backward(sys, g.point(a), g.point(c));
    const MatrixXd psi_ab = transition_backward(sys, g.point(a), g.point(b));
    const MatrixXd psi_bc = transition_backward(sys, g.point(b), g.point(c));
    CHECK((psi_ac - psi_ab * psi_bc).norm() <= 1e-9 * (1 + psi_ac.norm()));
    const MatrixXd via = transition_backward_via_dual(sys, g.point(a), g.point(c));
    CHECK((psi_ac - via).norm() <= 1e-9 * (1 + psi_ac.norm()));
  }
}

TEST_CASE("backward solutions") {
  const auto z = make(GeneratorKind::integers, R(-5), R(0));
  const auto sys = constant_sys(Direction::backward_nabla, z, scalar(0), scalar(1), scalar(1), R(0));
  const Trajectory tr = solve_backward_ivp(sys, VectorXd::Constant(1, 5.0),
                                           control_from_expr(MatrixExpr::parse({{"1"}})), R(-3));
  CHECK(tr.state.at(R(-3))(0, 0) == 2.0);
  CHECK(tr.state.at(R(-1))(0, 0) == 4.0);
  CHECK(tr.output.at(R(0))(0, 0) == 5.0);

  const auto h = scalar_sys(Direction::backward_nabla, z, 0.7, R(0));
  const Trajectory hom = solve_backward_ivp(h, VectorXd::Constant(1, 2.0), zero_control(1), R(-4));
  for (std::int64_t k = -4; k <= 0; ++k) {
    CHECK(hom.state.at(R(k))(0, 0) == doctest::Approx(2.0 * transition_backward(h, R(k), R(0))(0, 0)).epsilon(1e-15));
  }

  CHECK_THROWS_AS(solve_backward_ivp(sys, VectorXd::Zero(2), zero_control(1), R(-3)), DomainError);
  CHECK_THROWS_AS(solve_backward_ivp(sys, VectorXd::Zero(1), zero_control(2), R(-3)), DomainError);
  CHECK_THROWS_AS(solve_backward_ivp(sys, VectorXd::Zero(1), zero_control(1), R(-7, 2)), DomainError);
}

TEST_CASE("stepping matches the kernel form and the dual forward solution") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const TimeScale ts = testing_support::random_mixed_scale(rng);
    const Eigen::Index n = testing_support::pick(rng, 1, 3);
    const Eigen::Index m = testing_support::pick(rng, 1, n);
    const LinearSystem sys(Direction::backward_nabla, ts, testing_support::random_matrix_expr(rng, n, n),
                           testing_support::random_matrix_expr(rng, n, m),
                           mat(MatrixXd::Identity(n, n)), std::nullopt, ts.max(), R(1, 100));
    std::vector<std::string> ventries;
    for (Eigen::Index j = 0; j < m; ++j) ventries.push_back(testing_support::random_entry(rng));
    std::vector<std::vector<std::string>> vrows;
    for (const auto& e : ventries) vrows.push_back({e});
    const MatrixExpr vexpr = MatrixExpr::parse(vrows);
    const Control v = control_from_expr(vexpr);
    const VectorXd y0 = testing_support::random_matrix(rng, n, 1);
    const Trajectory tr = solve_backward_ivp(sys, y0, v, ts.min());

    const Grid& g = tr.state.grid();
    const std::size_t i = static_cast<std::size_t>(testing_support::pick(rng, 0, g.size() - 1));
    const VectorXd stepped = tr.state.value(i);
    const VectorXd kernel = backward_variation_of_constants(sys, y0, v, g.point(i));
    CHECK((stepped - kernel).norm() <= 1e-6 * (1 + stepped.norm()));

    // x(t) = y(-t) for the dual forward system driven by u(t) = v(-t).
    const LinearSystem dual = dualize_system(sys);
    const Control u = control_from_expr(vexpr.reflect_time(false));
    const Trajectory fw = solve_forward_ivp(dual, y0, u, -ts.min());
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const VectorXd x = fw.state.at(-g.point(k));
      worst = std::max(worst, (x - tr.state.value(k)).norm() / (1 + x.norm()));
    }
    if (ts.purely_discrete()) {
      CHECK(worst <= 1e-12);
    } else {
      CHECK(worst <= 1e-6);
    }
  }
}

TEST_CASE("stepping agrees with an adaptive reference integrator on reals") {
  const auto r = make(GeneratorKind::reals, R(-2), R(0));
  const MatrixExpr A = MatrixExpr::parse({{"0", "1"}, {"-1", "-0.2*s"}});
  const MatrixExpr B = MatrixExpr::parse({{"0"}, {"1"}});
  const LinearSystem sys(Direction::backward_nabla, r, A, B, mat(MatrixXd::Identity(2, 2)),
                         std::nullopt, R(0), R(1, 100));
  const MatrixExpr vexpr = MatrixExpr::parse({{"cos(s)"}});
  const Control v = control_from_expr(vexpr);
  VectorXd y0(2);
  y0 << 1, -0.5;
  const Trajectory tr = solve_backward_ivp(sys, y0, v, R(-2));
  const VectorXd ref = testing_support::reference_flow(A, B, v, y0, 0.0, -2.0);
  CHECK((tr.state.at(R(-2)) - ref).norm() <= 1e-6 * (1 + ref.norm()));
}

TEST_CASE("progressive and regressive systems") {
  const auto p = make(GeneratorKind::periodic_union, R(0), R(5));
  const auto bad = scalar_sys(Direction::backward_nabla, p.dual(), 1.0, R(0));
  const InvertibilityReport rep = is_progressive(bad);
  CHECK_FALSE(rep.holds);
  REQUIRE(rep.witness.has_value());
  CHECK(bad.scale().classify(*rep.witness).left == Density::scattered);

  const auto z = make(GeneratorKind::integers, R(-3), R(3));
  CHECK(is_progressive(scalar_sys(Direction::backward_nabla, z, -1.0, R(0))).holds);
  CHECK(is_progressive(scalar_sys(Direction::backward_nabla, make(GeneratorKind::reals, R(0), R(1)), 1.0, R(0))).holds);
  CHECK_FALSE(is_regressive(scalar_sys(Direction::forward_delta, z, -1.0, R(0))).holds);
  CHECK(is_regressive(scalar_sys(Direction::forward_delta, z, 1.0, R(0))).holds);

  std::mt19937_64 rng(4);
  int singular = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const TimeScale ts = testing_support::random_mixed_scale(rng);
    MatrixXd A = testing_support::random_matrix(rng, 2, 2);
    if (trial % 2 == 0 && !ts.purely_discrete()) {
      // Make I - nu A singular at a left-scattered point of the scale.
      const Grid g = build_grid(ts, R(1, 10));
      for (std::size_t i = 1; i < g.size(); ++i) {
        if (g.gap_before(i)) {
          A(0, 0) = 1.0 / to_double(g.nu(i));
          A(0, 1) = 0.0;
          break;
        }
      }
    }
    const auto sys = constant_sys(Direction::backward_nabla, ts, A, MatrixXd::Identity(2, 2),
                                  MatrixXd::Identity(2, 2), ts.max(), R(1, 10));
    const bool prog = is_progressive(sys).holds;
    singular += prog ? 0 : 1;
    CHECK(prog == is_regressive(dualize_system(sys)).holds);
  }
  CHECK(singular > 0);
}
